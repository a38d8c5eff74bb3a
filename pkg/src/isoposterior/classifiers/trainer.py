"""A picklable, configured training procedure for one classifier kind."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..dataset import ClassWeights, LabeledDataset
from ..errors import DomainError
from .base import KINDS, SCORE_BASED, TrainConfig
from .logreg import train_logreg
from .svm import train_svm
from .tree import select_ccp_alpha, train_tree


@dataclass(frozen=True)
class Trainer:
    """``Trainer("svm")(dataset, weights)`` trains and returns a model.

    ``init`` is an optional warm start, honoured only by the svm solver.
    """

    kind: str
    config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown classifier {self.kind!r}; choose from {', '.join(KINDS)}")

    @property
    def score_based(self) -> bool:
        return self.kind in SCORE_BASED

    def __call__(self, dataset: LabeledDataset, weights: ClassWeights | None = None, init=None):
        if self.kind == "svm":
            return train_svm(dataset, weights, self.config, init_alpha=init)
        if self.kind == "logreg":
            return train_logreg(dataset, weights, self.config)
        return train_tree(dataset, weights, self.config)

    def resolved(self, dataset: LabeledDataset) -> "Trainer":
        """Fix data-dependent defaults (the tree pruning strength) on ``dataset``."""
        if self.kind == "tree" and self.config.tree_ccp_alpha is None:
            alpha = select_ccp_alpha(dataset, None, self.config)
            return replace(self, config=self.config.with_(tree_ccp_alpha=alpha))
        return self
