"""Train/test partitions for the three evaluation protocols.

* leave-one-out: one trial per sequence, that sequence alone is tested;
* k-fold: stratified, each class split into k near-equal folds;
* random trials: per class, a fixed fraction is drawn for training, repeated.

Plans are generated once from a seed and serialized, so every experiment
reuses the same partitions.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConstraintError, DataError
from ..tensor import make_rng


@dataclass(frozen=True)
class Protocol:
    kind: str  # "loo", "kfold" or "random"
    k: int = 0
    trials: int = 0
    train_fraction: float = 0.0

    @classmethod
    def parse(cls, text: str) -> "Protocol":
        """``loo``, ``kfold:4`` or ``random:20:0.5``."""
        parts = text.strip().lower().split(":")
        try:
            if parts[0] == "loo" and len(parts) == 1:
                return cls("loo")
            if parts[0] == "kfold" and len(parts) == 2:
                return cls("kfold", k=int(parts[1]))
            if parts[0] == "random" and len(parts) == 3:
                return cls("random", trials=int(parts[1]), train_fraction=float(parts[2]))
        except ValueError:
            pass
        raise ConstraintError(f"bad protocol {text!r}; use loo, kfold:K or random:T:F")

    def __str__(self) -> str:
        if self.kind == "kfold":
            return f"kfold:{self.k}"
        if self.kind == "random":
            return f"random:{self.trials}:{self.train_fraction!r}"
        return "loo"


@dataclass(frozen=True)
class SplitPlan:
    protocol: Protocol
    seed: int
    trials: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]

    def train(self, trial: int) -> tuple[str, ...]:
        return self.trials[trial][0]

    def test(self, trial: int) -> tuple[str, ...]:
        return self.trials[trial][1]


def _by_class(manifest):
    groups = defaultdict(list)
    for s in manifest.sequences:
        groups[s.class_index].append(s.id)
    return [groups[c] for c in sorted(groups)]


def make_splits(manifest, protocol: Protocol | str, seed: int = 0) -> SplitPlan:
    if isinstance(protocol, str):
        protocol = Protocol.parse(protocol)
    ids = manifest.ids()
    order = {sid: i for i, sid in enumerate(ids)}
    rng = make_rng(seed)
    groups = _by_class(manifest)
    trials = []

    def ordered(xs):
        return tuple(sorted(xs, key=order.__getitem__))

    if protocol.kind == "loo":
        if len(ids) < 2:
            raise ConstraintError("leave-one-out needs at least 2 sequences")
        trials = [(tuple(x for x in ids if x != sid), (sid,)) for sid in ids]
    elif protocol.kind == "kfold":
        k = protocol.k
        smallest = min(len(g) for g in groups)
        if k < 2 or k > smallest:
            raise ConstraintError(f"{k}-fold split infeasible with {smallest} sequences in the "
                                  "smallest class")
        folds = [[] for _ in range(k)]
        for g in groups:
            perm = [g[i] for i in rng.permutation(len(g))]
            for f, chunk in enumerate(np.array_split(np.array(perm, dtype=object), k)):
                folds[f].extend(chunk.tolist())
        for f in range(k):
            test = set(folds[f])
            trials.append((ordered(x for x in ids if x not in test), ordered(test)))
    elif protocol.kind == "random":
        frac = protocol.train_fraction
        if protocol.trials < 1 or not 0 < frac < 1:
            raise ConstraintError(f"bad random-trial protocol {protocol}")
        for _ in range(protocol.trials):
            train = []
            for g in groups:
                n_train = int(np.floor(frac * len(g) + 0.5))
                if n_train < 1 or n_train >= len(g):
                    raise ConstraintError(
                        f"train fraction {frac} leaves an empty side for a class of {len(g)}")
                perm = rng.permutation(len(g))
                train.extend(g[i] for i in perm[:n_train])
            train_set = set(train)
            trials.append((ordered(train_set), ordered(x for x in ids if x not in train_set)))
    else:
        raise ConstraintError(f"unknown protocol {protocol.kind!r}")
    return SplitPlan(protocol, int(seed), tuple(trials))


def format_splits(plan: SplitPlan) -> str:
    lines = [f"protocol {plan.protocol}", f"seed {plan.seed}"]
    for i, (train, test) in enumerate(plan.trials):
        lines += [f"trial {i}", "train " + " ".join(train), "test " + " ".join(test)]
    return "\n".join(lines) + "\n"


def write_splits(plan: SplitPlan, path) -> None:
    Path(path).write_text(format_splits(plan))


def read_splits(path) -> SplitPlan:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read split plan {path}: {exc}") from exc
    try:
        protocol = Protocol.parse(lines[0].split(" ", 1)[1])
        seed = int(lines[1].split(" ", 1)[1])
        trials = []
        body = lines[2:]
        for i in range(0, len(body), 3):
            head, train, test = body[i:i + 3]
            if head != f"trial {i // 3}" or not train.startswith("train") \
                    or not test.startswith("test"):
                raise ValueError(f"bad trial block at line {i + 3}")
            trials.append((tuple(train.split()[1:]), tuple(test.split()[1:])))
    except (IndexError, ValueError) as exc:
        raise DataError(f"{path}: malformed split plan: {exc}") from exc
    return SplitPlan(protocol, seed, tuple(trials))
