"""k-induction over the composed strongest system-property and system-initial-condition."""
import concurrent.futures
import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

from tqdm import tqdm

from models import Postulate, SystemModel, system_order_bound
from utils import qe_real
from utils.compose import (CompositionResult, initial_condition, strongest_property_static,
                           strongest_property_timed, verify_postulated_static)
from utils.errors import ResourceLimitError, UnsupportedTheoryError
from utils.formula import (TRUE, Formula, TimedVar, Value, all_vars, conj, forall_closure, implies,
                           instantiate, neg, order, shift)
from utils.verdict import Invalid, Trace, Unknown, Valid, Verdict

logger = logging.getLogger(__name__)

__all__ = ["InductionConfig", "Valid", "Invalid", "Unknown", "Verdict", "base_obligation",
           "inductive_obligation", "k_induction", "run_pipeline", "verify_all", "compose_system"]

PostulateLike = Union[Postulate, Formula]


@dataclass(frozen=True)
class InductionConfig:
    k_max: int = 10
    parallel: bool = True
    cap: Optional[int] = None
    rounds: int = 64
    progress: bool = False

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError(f"k_max must be at least 1, got {self.k_max}")


def _postulate(postl: PostulateLike) -> Postulate:
    return postl if isinstance(postl, Postulate) else Postulate.from_formula(postl)


def _ssp_order(ssp: Formula) -> int:
    return order(ssp) if all_vars(ssp) else 0


def base_parts(init: Formula, ssp: Formula, postl: PostulateLike, k: int) -> Tuple[Formula, Formula]:
    """Antecedent and consequent of the base condition for the first k steps"""
    p = _postulate(postl)
    d = _ssp_order(ssp)
    antecedent = conj(init, *[instantiate(ssp, s) for s in range(d, k)])
    required = [p.at(i) for i in range(k)]
    consequent = conj(*[f for f in required if f is not None])
    return antecedent, consequent


def base_obligation(init: Formula, ssp: Formula, postl: PostulateLike, k: int) -> Formula:
    antecedent, consequent = base_parts(init, ssp, postl, k)
    return forall_closure(implies(antecedent, consequent))


def inductive_obligation(ssp: Formula, postl: PostulateLike, k: int) -> Formula:
    """ssp on steps n..n+k and postl on n..n+k-1 imply postl at n+k (current step k is offset 0)"""
    p = _postulate(postl)
    d = _ssp_order(ssp)
    history = [shift(ssp, j - k) for j in range(d, k + 1)]
    hypotheses = [shift(p.body, i - k) for i in range(k)]
    return forall_closure(implies(conj(*history, *hypotheses), p.body))


def _trace(model: Dict[TimedVar, Value]) -> Trace:
    steps = [v.step for v in model]
    rows: Trace = [{} for _ in range(max(steps, default=0) + 1)]
    for v, x in sorted(model.items(), key=lambda vx: vx[0].key()):
        rows[v.step][v.name] = x
    return rows


def _counterexample(init: Formula, ssp: Formula, postl: Postulate, k: int, rounds: int) -> Verdict:
    antecedent, consequent = base_parts(init, ssp, postl, k)
    witness, model = qe_real.find_model(conj(antecedent, neg(consequent)), rounds=rounds)
    if model is not None:
        return Invalid(_trace(model))
    if witness is not None:
        logger.warning(f"Counterexample at k={k} stays nonstandard; reporting it symbolically")
        return Invalid(_trace({v: str(x) for v, x in witness.values.items()}), symbolic=True)
    logger.warning(f"Base case fails at k={k} but no counterexample was extracted")
    return Unknown("budget")


def _holds(f: Formula, cap: Optional[int]) -> bool:
    return qe_real.eliminate_all(f, cap) == TRUE


def k_induction(init: Formula, ssp: Formula, postl: PostulateLike,
                cfg: InductionConfig = InductionConfig()) -> Verdict:
    p = _postulate(postl)
    if any(not v.is_relative for v in all_vars(ssp)):
        logger.warning("Strongest system-property has absolute indices; k-induction needs a time-invariant one")
        return Unknown("unsupported")
    steps = range(1, cfg.k_max + 1)
    try:
        with concurrent.futures.ThreadPoolExecutor(max_workers=2 if cfg.parallel else 1) as pool:
            for k in tqdm(steps, desc="k-induction", disable=not cfg.progress):
                base = base_obligation(init, ssp, p, k)
                step = inductive_obligation(ssp, p, k)
                base_future = pool.submit(_holds, base, cfg.cap)
                step_future = pool.submit(_holds, step, cfg.cap)
                if not base_future.result():
                    step_future.cancel()
                    logger.info(f"Base case fails at k={k}")
                    return _counterexample(init, ssp, p, k, cfg.rounds)
                if step_future.result():
                    logger.info(f"Inductive step holds at k={k}")
                    return Valid(k)
                logger.info(f"k={k}: base holds, inductive step does not")
    except UnsupportedTheoryError as e:
        logger.warning(f"k-induction unsupported: {str(e)}")
        return Unknown("unsupported")
    except ResourceLimitError as e:
        logger.warning(f"k-induction ran out of budget: {str(e)}")
        return Unknown("budget")
    return Unknown("budget")


def is_static(s: SystemModel, postulates: Sequence[Postulate]) -> bool:
    return system_order_bound(s) == 0 and not s.initials and all(p.order == 0 for p in postulates)


def compose_system(s: SystemModel, cfg: InductionConfig = InductionConfig(),
                   static: bool = False) -> CompositionResult:
    """Strongest system-property and, for timed systems, the system-initial-condition"""
    if static:
        ssp = strongest_property_static(s, cfg.cap)
        return CompositionResult(ssp=ssp, raw_ssp=ssp)
    result = strongest_property_timed(s, cfg.cap)
    init = initial_condition(s, result.pruned_order, cfg.cap)
    return replace(result, init=init)


def verify_all(s: SystemModel, postulates: Sequence[PostulateLike],
               cfg: InductionConfig = InductionConfig()) -> Tuple[List[Verdict], CompositionResult]:
    """Compose once, then one verdict per postulate"""
    items = [_postulate(p) for p in postulates]
    static = is_static(s, items)
    logger.info(f"Verifying {len(items)} postulate(s) on {s.name} via the {'static' if static else 'timed'} path")
    result = compose_system(s, cfg, static)
    verdicts: List[Verdict] = []
    for p in items:
        if static:
            verdicts.append(verify_postulated_static(result.ssp, p.body, cfg.cap, cfg.rounds))
        else:
            verdicts.append(k_induction(result.init, result.ssp, p, cfg))
        logger.info(f"Postulate {p.name or p.source}: {verdicts[-1].label}")
    return verdicts, result


def run_pipeline(s: SystemModel, postl: PostulateLike,
                 cfg: InductionConfig = InductionConfig()) -> Tuple[Verdict, CompositionResult]:
    verdicts, result = verify_all(s, [postl], cfg)
    return verdicts[0], result
