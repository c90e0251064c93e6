"""Mini-batch SGD over (scene, Decision-Maker output) pairs."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from ..config import ModelConfig
from ..decision.scripted import ground_truth_logic
from ..encoding.vocab import Vocabulary
from ..exceptions import ContractError, NonFiniteError, TrainingDivergedError
from ..models.logic import DecisionCategory, DriverLogicOutput, RuleThresholds
from ..models.scene import BevGrid, Scene
from ..models.training import AblationMode, LossWeights, TrainConfig
from ..nn import ops
from ..nn.optim import clip_by_global_norm, sgd_step
from ..nn.tape import GradTape
from ..sim.raster import rasterize_bev
from .losses import LossTerms, clearance_fields, total_loss
from .model import TextCues, plan_matrix
from .params import PlannerParams

logger = logging.getLogger(__name__)

LOSS_COLUMNS = ["epoch", "imitation", "collision", "consistency", "total"]

CUE_DESCRIPTIONS = {
    AblationMode.EXECUTOR_ONLY: "text cues are EMPTY tokens",
    AblationMode.GT_TEXT: "text cues are ground-truth template texts",
    AblationMode.DM_TEXT: "text cues are the Decision-Maker outputs",
    AblationMode.DM_TEXT_CL: "text cues are the Decision-Maker outputs, with the consistency loss",
}


def cue_logic(mode: AblationMode, scene: Scene, staged: DriverLogicOutput | None) -> DriverLogicOutput | None:
    """The logic output whose texts reach the planner under ``mode``."""
    if mode is AblationMode.EXECUTOR_ONLY:
        return None
    if mode is AblationMode.GT_TEXT:
        return ground_truth_logic(scene)
    return staged


def _cue_decision(logic: DriverLogicOutput | None, staged: DriverLogicOutput | None) -> DecisionCategory | None:
    """Category the consistency term is measured against: the one the cue texts announce."""
    source = logic if logic is not None else staged
    return source.category if source is not None else None


@dataclass(frozen=True, eq=False)
class TrainingExample:
    scene: Scene
    grid: BevGrid
    cues: TextCues
    decision: DecisionCategory | None
    fields: np.ndarray


def prepare_examples(
    dataset: Sequence[tuple[Scene, DriverLogicOutput]],
    mode: AblationMode,
    vocab: Vocabulary,
) -> list[TrainingExample]:
    examples = []
    for scene, staged in dataset:
        logic = cue_logic(mode, scene, staged)
        examples.append(TrainingExample(
            scene=scene,
            grid=rasterize_bev(scene),
            cues=TextCues.from_logic(logic, vocab),
            decision=_cue_decision(logic, staged),
            fields=clearance_fields(scene),
        ))
    return examples


def example_loss(
    example: TrainingExample,
    params: PlannerParams,
    mode: AblationMode,
    weights: LossWeights,
    thresholds: RuleThresholds,
) -> LossTerms:
    pred = plan_matrix(example.grid, example.cues, params)
    return total_loss(pred, example.scene, example.decision, weights, mode, thresholds, example.fields)


@dataclass
class TrainResult:
    params: PlannerParams
    log: pd.DataFrame


def train(
    dataset: Sequence[tuple[Scene, DriverLogicOutput]],
    cfg: TrainConfig,
    vocab: Vocabulary,
    model: ModelConfig | None = None,
    weights: LossWeights | None = None,
    thresholds: RuleThresholds | None = None,
    params: PlannerParams | None = None,
) -> TrainResult:
    """Deterministic given ``cfg.seed``; the input ``params`` are copied, never updated."""
    if not dataset:
        raise ContractError("training needs at least one scene")
    model = model or ModelConfig()
    weights = weights or LossWeights()
    thresholds = thresholds or RuleThresholds()
    if params is None:
        params = PlannerParams.init(cfg.seed, len(vocab), model.dim, model.num_heads, model.hidden, model.max_len)
    else:
        params = params.copy()

    logger.info(f"Ablation {cfg.ablation.value}: {CUE_DESCRIPTIONS[cfg.ablation]}")
    examples = prepare_examples(dataset, cfg.ablation, vocab)
    tensors = list(params.parameters().values())
    velocity = [np.zeros_like(t.value) for t in tensors]
    rng = np.random.default_rng(cfg.seed)
    rows = []

    for epoch in range(1, cfg.epochs + 1):
        sums = dict.fromkeys(LOSS_COLUMNS[1:], 0.0)
        order = rng.permutation(len(examples))
        for start in range(0, len(order), cfg.batch_size):
            batch = [examples[i] for i in order[start : start + cfg.batch_size]]
            try:
                with GradTape() as tape:
                    terms = [example_loss(ex, params, cfg.ablation, weights, thresholds) for ex in batch]
                    objective = terms[0].total
                    for term in terms[1:]:
                        objective = ops.add(objective, term.total)
                    objective = ops.scale(objective, 1.0 / len(batch))
                grads = tape.gradient(objective, tensors)
                grads, norm = clip_by_global_norm(grads, cfg.grad_clip)
                if not np.isfinite(norm):
                    raise NonFiniteError(f"gradient norm is {norm}")
                sgd_step(tensors, grads, cfg.lr, cfg.momentum, velocity)
            except NonFiniteError as e:
                logger.error(f"Epoch {epoch}: non-finite values ({e}); lr={cfg.lr} is likely too high")
                raise TrainingDivergedError(f"training diverged at epoch {epoch} with lr={cfg.lr}: {e}") from e
            for term in terms:
                for name, value in term.values().items():
                    sums[name] += value

        row = {"epoch": epoch, **{name: total / len(examples) for name, total in sums.items()}}
        rows.append(row)
        logger.info(
            f"Epoch {epoch}/{cfg.epochs}: imitation {row['imitation']:.4f} collision {row['collision']:.4f} "
            f"consistency {row['consistency']:.4f} total {row['total']:.4f}"
        )

    return TrainResult(params, pd.DataFrame(rows, columns=LOSS_COLUMNS))


def write_loss_log(log: pd.DataFrame, path: Path) -> None:
    log.to_csv(path, index=False, columns=LOSS_COLUMNS)
    logger.info(f"Wrote loss log with {len(log)} epochs to {path}")
