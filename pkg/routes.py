from flask import jsonify, request
from app import app
from utils.cli import compose_report, order_report, range_report, sat_report, verify_report
import logging

logger = logging.getLogger(__name__)


def _settings():
    return app.config["RELIC_SETTINGS"]


def _body(*required):
    """JSON body plus the first missing key, if any"""
    if not request.is_json:
        return None, 'Content-Type must be application/json'
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        return None, 'Request body must be a JSON object'
    for key in required:
        if data.get(key) in (None, ''):
            return None, f'No {key} provided'
    return data, None


def _run(action, *args):
    try:
        report = action(*args)
        logger.info(f"{report.command} finished with exit code {report.exit_code}")
        return jsonify(report.to_structured())
    except ValueError as e:
        # SpecError, SortError, ContractViolation and friends
        logger.error(f"Invalid input: {str(e)}")
        return jsonify({'error': 'Invalid input', 'details': str(e)}), 422
    except RuntimeError as e:
        logger.error(f"Engine error: {str(e)}")
        return jsonify({'error': 'Verification engine failed', 'details': str(e)}), 500
    except Exception as e:
        logger.error(f"Unexpected error: {str(e)}", exc_info=True)
        return jsonify({'error': 'An unexpected error occurred', 'details': str(e)}), 500


@app.route('/')
def index():
    return jsonify({'service': 'relic',
                    'endpoints': ['/api/compose', '/api/verify', '/api/order', '/api/sat', '/api/range']})


@app.route('/api/compose', methods=['POST'])
def compose():
    data, error = _body('spec')
    if error:
        return jsonify({'error': error}), 400
    return _run(compose_report, data['spec'], data.get('name', 'request'), _settings())


@app.route('/api/verify', methods=['POST'])
def verify():
    data, error = _body('spec')
    if error:
        return jsonify({'error': error}), 400
    k_max = data.get('k_max')
    if k_max is not None and (not isinstance(k_max, int) or k_max < 1):
        return jsonify({'error': 'k_max must be a positive integer'}), 400
    return _run(verify_report, data['spec'], data.get('name', 'request'), _settings(), k_max)


@app.route('/api/order', methods=['POST'])
def order():
    data, error = _body('spec')
    if error:
        return jsonify({'error': error}), 400
    return _run(order_report, data['spec'], data.get('name', 'request'), _settings())


@app.route('/api/sat', methods=['POST'])
def sat():
    data, error = _body('script')
    if error:
        return jsonify({'error': error}), 400
    logic = data.get('logic', 'auto')
    if logic not in ('auto', 'real', 'int', 'mixed'):
        return jsonify({'error': f'Unknown logic {logic}'}), 400
    return _run(sat_report, data['script'], data.get('name', 'request'), _settings(), logic)


@app.route('/api/range', methods=['POST'])
def range_query():
    data, error = _body('graph', 'output')
    if error:
        return jsonify({'error': error}), 400
    if not isinstance(data['graph'], dict):
        return jsonify({'error': 'graph must be a JSON object'}), 400
    return _run(range_report, data['graph'], data.get('name', 'request'), _settings(), data['output'],
                bool(data.get('baseline', False)))
