"""Training loop, evaluation and multi-seed aggregation for the three tasks."""

from __future__ import annotations

import copy
import dataclasses
import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch
from torch.nn import functional as F

from .decoders import mixture_nll, point_estimate, q3_loss
from .encoder import ContextArrays, collate, context_arrays
from .hypergraph import TemporalHypergraph
from .metrics import auc_1v1, binary_auc, confusion_matrix, mae_log, mean_std
from .model import HIT, ModelConfig
from .patterns import TIMED_PATTERNS, LabeledInstance, Pattern
from .walks import ALPHA_GRID, M_GRID, STEP_GRID, SamplerConfig, sample_triplet_context

logger = logging.getLogger(__name__)

EVAL_SALT = 1_000_003
DEFAULT_SEEDS = (0, 1, 2, 3, 4)

# class pairs of the discrimination task; the first set is the positive class
Q3_PAIRS = {
    "closure_vs_triangle": ((Pattern.CLOSURE,), (Pattern.TRIANGLE,)),
    "closure_triangle_vs_wedge": ((Pattern.CLOSURE, Pattern.TRIANGLE), (Pattern.WEDGE,)),
    "wedge_vs_edge": ((Pattern.WEDGE,), (Pattern.EDGE,)),
}


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 64
    max_epochs: int = 50
    patience: int = 5
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    sampler: SamplerConfig = SamplerConfig()
    resample_walks: bool = True
    q3_pair: str = "closure_vs_triangle"
    # weight of mean(C_W^2) added to the Q3 loss; pins walk scores that carry no
    # class signal at 0 instead of leaving them to trade off against the bias
    q3_score_penalty: float = 0.0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.q3_pair not in Q3_PAIRS:
            raise ValueError(f"unknown Q3 pair {self.q3_pair!r}")


@dataclass
class TrainResult:
    model: HIT
    history: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_metric: float = float("nan")


def build_contexts(graph: TemporalHypergraph, instances: Sequence[LabeledInstance], sampler: SamplerConfig,
                   salt: int) -> list[ContextArrays]:
    return [context_arrays(sample_triplet_context(graph, inst.triplet, sampler, salt)) for inst in instances]


# -- task adapters ------------------------------------------------------------
# Rows index into the instance list; Q2 can emit several rows per instance.

class _Task:
    higher_is_better = True

    def __init__(self, instances: Sequence[LabeledInstance], config: TrainConfig):
        self.instances = list(instances)
        self.config = config

    def rows(self) -> np.ndarray:
        return np.arange(len(self.instances))


class _Q1(_Task):
    def __init__(self, instances, config):
        super().__init__(instances, config)
        self.y = torch.tensor([int(i.label) for i in self.instances], dtype=torch.int64)

    def loss(self, model, batch, rows):
        return F.cross_entropy(model(batch), self.y[rows])

    def predict(self, model, batch, rows):
        return torch.softmax(model(batch), -1)

    def metric(self, outputs, rows):
        return auc_1v1(outputs.numpy(), self.y[rows].numpy())


class _Q2(_Task):
    higher_is_better = False

    def __init__(self, instances, config):
        super().__init__(instances, config)
        inst_idx, pat, t = [], [], []
        for i, inst in enumerate(self.instances):
            for j, p in enumerate(TIMED_PATTERNS):
                dt = inst.times.get(p)
                if dt is not None:
                    inst_idx.append(i)
                    pat.append(j)
                    t.append(dt)
        self.inst_idx = np.asarray(inst_idx, dtype=np.int64)
        self.pattern = torch.tensor(pat, dtype=torch.int64)
        self.t = torch.tensor(t, dtype=torch.float64)

    def rows(self):
        return np.arange(len(self.inst_idx))

    def instance_of(self, rows):
        return self.inst_idx[rows]

    def log_times(self) -> list[torch.Tensor]:
        return [torch.log(self.t[self.pattern == j]) for j in range(len(TIMED_PATTERNS))]

    def loss(self, model, batch, rows):
        log_w, mu, log_var = model(batch, self.pattern[rows])
        return mixture_nll(log_w, mu, log_var, self.t[rows]).mean()

    def predict(self, model, batch, rows):
        log_w, mu, log_var = model(batch, self.pattern[rows])
        return torch.stack([mixture_nll(log_w, mu, log_var, self.t[rows]), point_estimate(log_w, mu)], -1)

    def metric(self, outputs, rows):
        return float(outputs[:, 0].mean())


class _Q3(_Task):
    def __init__(self, instances, config):
        pos, neg = Q3_PAIRS[config.q3_pair]
        keep = [i for i in instances if i.label in pos + neg]
        super().__init__(keep, config)
        self.y = torch.tensor([i.label in pos for i in keep], dtype=torch.bool)

    def loss(self, model, batch, rows):
        x, scores = model(batch)
        loss = q3_loss(x, self.y[rows]).mean()
        if self.config.q3_score_penalty:
            loss = loss + self.config.q3_score_penalty * (scores ** 2).mean()
        return loss

    def predict(self, model, batch, rows):
        x, _ = model(batch)
        return x.unsqueeze(-1)

    def metric(self, outputs, rows):
        return 100.0 * binary_auc(outputs[:, 0].numpy(), self.y[rows].numpy())


def make_task(task: str, instances, config: TrainConfig) -> _Task:
    return {"q1": _Q1, "q2": _Q2, "q3": _Q3}[task](instances, config)


def _instance_rows(task, rows):
    return task.instance_of(rows) if isinstance(task, _Q2) else rows


def _batches(n: int, size: int, rng: np.random.Generator | None):
    order = np.arange(n) if rng is None else rng.permutation(n)
    for s in range(0, n, size):
        yield order[s:s + size]


def _predict(model: HIT, task: _Task, contexts: list[ContextArrays], batch_size: int) -> torch.Tensor:
    rows = task.rows()
    outs = []
    model.eval()
    with torch.no_grad():
        for b in _batches(len(rows), batch_size, None):
            r = rows[b]
            batch = collate([contexts[i] for i in _instance_rows(task, r)])
            outs.append(task.predict(model, batch, r))
    return torch.cat(outs) if outs else torch.zeros(0, 1, dtype=torch.float64)


def train(model: HIT, graph: TemporalHypergraph, train_instances: Sequence[LabeledInstance],
          valid_instances: Sequence[LabeledInstance], config: TrainConfig, seed: int = 0) -> TrainResult:
    """Adam with early stopping on the validation metric.

    The epoch-0 (untrained) model is a candidate checkpoint, so the returned
    model is never worse on validation than the initial one.
    """
    task_name = model.config.task
    tr_task = make_task(task_name, train_instances, config)
    va_task = make_task(task_name, valid_instances, config)
    if len(tr_task.rows()) == 0:
        raise ValueError("no training rows for this task")
    if task_name == "q2":
        model.head.warm_start(tr_task.log_times())
    sampler = config.sampler
    va_ctx = build_contexts(graph, va_task.instances, sampler, EVAL_SALT)
    tr_ctx = None if config.resample_walks else build_contexts(graph, tr_task.instances, sampler, 0)
    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate, betas=(0.9, 0.999), eps=1e-8)

    def validate():
        if len(va_task.rows()) == 0:
            return float("nan")
        return va_task.metric(_predict(model, va_task, va_ctx, config.batch_size), va_task.rows())

    sign = 1.0 if tr_task.higher_is_better else -1.0
    best = validate()
    result = TrainResult(model, [{"epoch": 0, "train_loss": None, "valid_metric": best}], 0, best)
    best_state = copy.deepcopy(model.state_dict())
    stale = 0
    for epoch in range(1, config.max_epochs + 1):
        ctx = build_contexts(graph, tr_task.instances, sampler, epoch) if tr_ctx is None else tr_ctx
        rng = np.random.default_rng([seed, epoch])
        rows = tr_task.rows()
        model.train()
        total, n = 0.0, 0
        for b in _batches(len(rows), config.batch_size, rng):
            r = rows[b]
            batch = collate([ctx[i] for i in _instance_rows(tr_task, r)])
            opt.zero_grad()
            loss = tr_task.loss(model, batch, r)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss {loss.item()} at epoch {epoch}, "
                                            f"batch starting at row {int(r[0])}")
            loss.backward()
            opt.step()
            total += loss.item() * len(r)
            n += len(r)
        metric = validate()
        result.history.append({"epoch": epoch, "train_loss": total / n, "valid_metric": metric})
        logger.info("epoch %d loss %.5f valid %.4f", epoch, total / n, metric)
        if np.isnan(best) or sign * metric >= sign * best:
            best, stale = metric, 0
            best_state = copy.deepcopy(model.state_dict())
            result.best_epoch = epoch
        else:
            stale += 1
            if stale >= config.patience:
                break
    model.load_state_dict(best_state)
    result.best_metric = best
    return result


def evaluate(model: HIT, graph: TemporalHypergraph, instances: Sequence[LabeledInstance], config: TrainConfig,
             contexts: list[ContextArrays] | None = None) -> dict:
    """Task metrics on ``instances`` with walks drawn from the fixed evaluation stream."""
    task = make_task(model.config.task, instances, config)
    if contexts is None:
        contexts = build_contexts(graph, task.instances, config.sampler, EVAL_SALT)
    out = _predict(model, task, contexts, config.batch_size)
    rows = task.rows()
    if isinstance(task, _Q1):
        probs = out.numpy()
        y = task.y.numpy()
        return {"task": "q1", "auc_1v1": auc_1v1(probs, y), "confusion": confusion_matrix(probs.argmax(1), y),
                "probs": probs, "labels": y}
    if isinstance(task, _Q2):
        report = {"task": "q2", "nll": {}, "mae_log": {}, "n": {}}
        nll, t_hat = out[:, 0].numpy(), out[:, 1].numpy()
        pat = task.pattern.numpy()
        t = task.t.numpy()
        for j, p in enumerate(TIMED_PATTERNS):
            sel = pat == j
            name = p.name.capitalize()
            report["n"][name] = int(sel.sum())
            if sel.any():
                report["nll"][name] = float(nll[sel].mean())
                report["mae_log"][name] = mae_log(t[sel], t_hat[sel])
        report["rows"] = {"pattern": pat, "t": t, "t_hat": t_hat, "nll": nll}
        return report
    x = out[:, 0].numpy()
    y = task.y.numpy()
    return {"task": "q3", "auc": task.metric(out, rows), "logits": x, "labels": y}


def run_seeds(model_config: ModelConfig, graph: TemporalHypergraph, train_instances, valid_instances,
              test_instances, config: TrainConfig) -> dict:
    """Train and test once per seed; aggregate with population standard deviation."""
    runs = []
    for seed in config.seeds:
        model = HIT(model_config, seed=seed)
        res = train(model, graph, train_instances, valid_instances, config, seed=seed)
        rep = evaluate(res.model, graph, test_instances, config)
        runs.append({"seed": seed, "best_epoch": res.best_epoch, "report": rep})
    key = {"q1": "auc_1v1", "q3": "auc"}.get(model_config.task)
    agg = {}
    if key:
        agg[key] = mean_std([r["report"][key] for r in runs])
    else:
        for name in ("nll", "mae_log"):
            pats = sorted(set(itertools.chain.from_iterable(r["report"][name] for r in runs)))
            agg[name] = {p: mean_std([r["report"][name][p] for r in runs if p in r["report"][name]]) for p in pats}
    return {"runs": runs, "aggregate": agg}


def sampler_grid(master_seed: int = 0) -> list[SamplerConfig]:
    return [SamplerConfig(alpha=a, M=M, m=m, master_seed=master_seed)
            for a, M, m in itertools.product(ALPHA_GRID, M_GRID, STEP_GRID)]


def grid_search(model_config: ModelConfig, graph, train_instances, valid_instances, config: TrainConfig,
                grid: Sequence[SamplerConfig] | None = None, seed: int = 0):
    """Best sampler configuration by validation metric (first seed only)."""
    grid = list(grid) if grid is not None else sampler_grid(config.sampler.master_seed)
    results = []
    for sc in grid:
        cfg = dataclasses.replace(config, sampler=sc)
        mc = dataclasses.replace(model_config, m=sc.m)
        res = train(HIT(mc, seed=seed), graph, train_instances, valid_instances, cfg, seed=seed)
        results.append((sc, res.best_metric))
    sign = -1.0 if model_config.task == "q2" else 1.0
    best = max(results, key=lambda r: sign * r[1])
    return best[0], results
