"""Bag-level learners.

Every learner here takes a list of bags (2-D instance arrays, or :class:`Bag`
objects) plus bag labels, and exposes ``score_bags`` (a success-oriented score in
[0, 1] used for AUC), ``predict`` (the learner's own labelling rule) and
``predict_proba``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.utils.validation import check_is_fitted

from ._validation import check_bags, check_binary_labels, label_from_score, proba_columns
from .classifiers import ClassifierSpec, LogisticRegression, RandomForest, make_classifier
from .classifiers.knn import squared_distances
from .exceptions import SingleClassError, UnknownNameError, ValidationError


def flatten_bags(bags, labels):
    """Concatenate bags in order, giving each instance its bag's label.

    Returns ``(X, y, groups)`` with ``groups[i]`` the bag index of row ``i``.
    """
    bags = check_bags(bags)
    labels = check_binary_labels(labels, len(bags), require_both=False)
    X = np.vstack(bags)
    y = np.concatenate([np.full(len(b), lab, dtype=np.int64) for b, lab in zip(bags, labels)])
    groups = np.concatenate([np.full(len(b), i, dtype=np.int64) for i, b in enumerate(bags)])
    return X, y, groups


def max_confidence(scores):
    """Aggregate instance success scores into ``(label, bag_score)``.

    Confidence is ``max(s, 1 - s)``; the most confident instance decides the label
    and its score becomes the bag score. Equal confidences resolve toward the
    failure label.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.size == 0:
        raise ValidationError("cannot aggregate an empty bag")
    conf = np.maximum(s, 1.0 - s)
    best = np.flatnonzero(conf == conf.max())
    labels = label_from_score(s[best])
    pick = best[np.argmin(labels)]
    return int(label_from_score(s[pick])), float(s[pick])


class BagClassifier(ClassifierMixin, BaseEstimator):
    """Shared plumbing for bag learners."""

    def _fit_common(self, bags, y, require_both=True):
        bags = check_bags(bags)
        y = check_binary_labels(y, len(bags), require_both=require_both)
        self.n_features_in_ = bags[0].shape[1]
        self.classes_ = np.array([0, 1])
        return bags, y

    def _check(self, bags):
        check_is_fitted(self, "n_features_in_")
        return check_bags(bags, self.n_features_in_)

    def score_bags(self, bags):
        raise NotImplementedError

    def predict(self, bags):
        return label_from_score(self.score_bags(bags))

    def predict_proba(self, bags):
        return proba_columns(self.score_bags(bags))

    def predict_bag(self, bag):
        """``(label, confidence)`` for a single bag."""
        return int(self.predict([bag])[0]), float(self.score_bags([bag])[0])

    _state_attrs: tuple = ()

    def get_state(self):
        check_is_fitted(self, "n_features_in_")
        state = {"n_features_in_": int(self.n_features_in_)}
        for name in self._state_attrs:
            value = getattr(self, name)
            state[name] = value.tolist() if isinstance(value, np.ndarray) else value
        return state

    def set_state(self, state):
        self.n_features_in_ = int(state["n_features_in_"])
        self.classes_ = np.array([0, 1])
        for name in self._state_attrs:
            value = state[name]
            setattr(self, name, np.asarray(value, dtype=np.float64) if isinstance(value, list) else value)
        return self


class MilToMl(BagClassifier):
    """Train an instance classifier under bag labels, aggregate by max confidence.

    Parameters
    ----------
    estimator : instance classifier
        Fitted on every instance, each carrying its bag's label.
    """

    def __init__(self, estimator=None):
        self.estimator = estimator

    def fit(self, bags, y):
        X, yi, _ = flatten_bags(bags, y)
        self._fit_common(bags, y)
        est = self.estimator if self.estimator is not None else RandomForest()
        self.estimator_ = clone(est).fit(X, yi)
        return self

    def get_state(self):
        from .persistence import model_to_dict

        return {**BagClassifier.get_state(self), "estimator_": model_to_dict(self.estimator_)}

    def set_state(self, state):
        from .persistence import model_from_dict

        BagClassifier.set_state(self, state)
        self.estimator_ = model_from_dict(state["estimator_"])
        return self

    def instance_scores(self, bag):
        return self.estimator_.score_samples(getattr(bag, "X", bag))

    def _aggregate(self, bags):
        return [max_confidence(self.instance_scores(b)) for b in self._check(bags)]

    def score_bags(self, bags):
        return np.array([s for _, s in self._aggregate(bags)])

    def predict(self, bags):
        return np.array([lab for lab, _ in self._aggregate(bags)], dtype=np.int64)


# -- Citation-kNN -----------------------------------------------------------------


def bag_distance_matrix(bags_a, bags_b, kind="minimal"):
    """Distances between every bag of ``bags_a`` and every bag of ``bags_b``.

    ``minimal`` is the smallest Euclidean distance over instance pairs;
    ``hausdorff`` is the classic max-min Hausdorff distance.
    """
    A = [np.asarray(getattr(b, "X", b), dtype=np.float64) for b in bags_a]
    B = [np.asarray(getattr(b, "X", b), dtype=np.float64) for b in bags_b]
    d2 = squared_distances(np.vstack(A), np.vstack(B))
    starts_a = np.concatenate([[0], np.cumsum([len(b) for b in A])[:-1]])
    starts_b = np.concatenate([[0], np.cumsum([len(b) for b in B])[:-1]])
    if kind == "minimal":
        out = np.minimum.reduceat(np.minimum.reduceat(d2, starts_a, axis=0), starts_b, axis=1)
    elif kind == "hausdorff":
        row_min = np.minimum.reduceat(d2, starts_b, axis=1)  # instance of A -> nearest in bag of B
        col_min = np.minimum.reduceat(d2, starts_a, axis=0)  # instance of B -> nearest in bag of A
        out = np.maximum(
            np.maximum.reduceat(row_min, starts_a, axis=0),
            np.maximum.reduceat(col_min, starts_b, axis=1),
        )
    else:
        raise UnknownNameError(f"unknown bag distance {kind!r}")
    return np.sqrt(out)


class CitationKNN(BagClassifier):
    """Citation-kNN over bag distances.

    Voters are the ``references`` nearest training bags plus every training bag
    that ranks the query among its own ``citations`` nearest bags (a bag can vote
    in both roles). The label is the majority vote with ties going to failure;
    the score is the fraction of positive votes.
    """

    def __init__(self, references=1, citations=3, distance="minimal"):
        self.references = references
        self.citations = citations
        self.distance = distance

    def fit(self, bags, y):
        bags, y = self._fit_common(bags, y, require_both=False)
        if len(bags) < self.references:
            raise ValidationError(f"need at least {self.references} training bags")
        self.bags_ = bags
        self.labels_ = y
        self.train_distances_ = bag_distance_matrix(bags, bags, self.distance)
        return self

    def get_state(self):
        state = super().get_state()
        state["bags_"] = [b.tolist() for b in self.bags_]
        state["labels_"] = self.labels_.tolist()
        return state

    def set_state(self, state):
        super().set_state(state)
        self.bags_ = [np.asarray(b, dtype=np.float64).reshape(-1, self.n_features_in_) for b in state["bags_"]]
        self.labels_ = np.asarray(state["labels_"], dtype=np.int64)
        self.train_distances_ = bag_distance_matrix(self.bags_, self.bags_, self.distance)
        return self

    def votes(self, bag):
        """Return ``(reference_indices, citer_indices)`` for one query bag."""
        d = bag_distance_matrix([bag], self.bags_, self.distance)[0]
        refs = np.argsort(d, kind="stable")[: self.references]
        if self.citations <= 0:
            return refs, np.empty(0, dtype=np.int64)
        # rank of the query among each training bag's neighbours; equal distances
        # rank the other training bags first
        others = self.train_distances_.copy()
        np.fill_diagonal(others, np.inf)
        closer = (others <= d[:, None]).sum(axis=1)
        citers = np.flatnonzero(closer < self.citations)
        return refs, citers

    def _vote(self, bag):
        refs, citers = self.votes(bag)
        voters = np.concatenate([refs, citers])
        pos = int(self.labels_[voters].sum())
        neg = voters.size - pos
        return int(pos > neg), (pos / voters.size if voters.size else 0.0)

    def score_bags(self, bags):
        return np.array([self._vote(b)[1] for b in self._check(bags)])

    def predict(self, bags):
        return np.array([self._vote(b)[0] for b in self._check(bags)], dtype=np.int64)


# -- axis-parallel rectangle --------------------------------------------------------


class APR(BagClassifier):
    """Axis-parallel rectangle learner.

    Fitting starts from the bounding box of all positive-bag instances and then,
    one face at a time, moves a face inward by ``step`` when that leaves fewer
    negative-bag instances inside while still holding at least one instance of
    every positive bag. A bag is positive when the fraction of its instances inside
    the box widened by ``epsilon`` reaches ``threshold``; that fraction is the score.
    """

    def __init__(self, threshold=0.5, epsilon=0.05, step=1.0):
        self.threshold = threshold
        self.epsilon = epsilon
        self.step = step

    def fit(self, bags, y):
        bags, y = self._fit_common(bags, y, require_both=False)
        pos_bags = [b for b, lab in zip(bags, y) if lab == 1]
        if not pos_bags:
            raise SingleClassError("APR needs at least one positive bag")
        neg = [b for b, lab in zip(bags, y) if lab == 0]
        Xn = np.vstack(neg) if neg else np.empty((0, self.n_features_in_))
        lower = np.min([b.min(axis=0) for b in pos_bags], axis=0)
        upper = np.max([b.max(axis=0) for b in pos_bags], axis=0)

        def inside(X, lo, hi):
            return np.all((X >= lo) & (X <= hi), axis=1)

        def valid(lo, hi):
            return all(inside(b, lo, hi).any() for b in pos_bags)

        current = int(inside(Xn, lower, upper).sum())
        self.n_iter_ = 0
        while current > 0:
            best = None
            for j in range(self.n_features_in_):
                for side in (0, 1):
                    lo, hi = lower.copy(), upper.copy()
                    if side == 0:
                        lo[j] += self.step
                    else:
                        hi[j] -= self.step
                    if lo[j] > hi[j] or not valid(lo, hi):
                        continue
                    count = int(inside(Xn, lo, hi).sum())
                    if count < current and (best is None or count < best[0]):
                        best = (count, lo, hi)
            if best is None:
                break
            current, lower, upper = best
            self.n_iter_ += 1
        self.lower_ = lower
        self.upper_ = upper
        self.negatives_inside_ = current
        return self

    _state_attrs = ("lower_", "upper_", "negatives_inside_", "n_iter_")

    def inside_fraction(self, bag):
        X = np.asarray(getattr(bag, "X", bag))
        ok = np.all((X >= self.lower_ - self.epsilon) & (X <= self.upper_ + self.epsilon), axis=1)
        return float(ok.mean())

    def score_bags(self, bags):
        return np.array([self.inside_fraction(b) for b in self._check(bags)])

    def predict(self, bags):
        return (self.score_bags(bags) >= self.threshold).astype(np.int64)


# -- EM-DD --------------------------------------------------------------------------


def _bag_max(values, starts):
    return np.maximum.reduceat(values, starts, axis=-1)


class EMDD(BagClassifier):
    """Expectation-maximisation diverse density.

    Instance affinity to a target point ``h`` is ``exp(-scale**2 * |x - h|**2)``;
    a bag's affinity is its best instance's. Diverse density multiplies positive
    bags' affinities and negative bags' complements. Each restart (one per
    positive-bag instance, or a seeded sample of ``max_restarts``) alternates
    picking every bag's most affine instance with gradient ascent on the resulting
    smooth objective, for ``epochs`` rounds. The best point seen across restarts,
    measured by the true diverse density, wins; equal values go to the lowest
    restart index.

    Gradient ascent starts from ``learning_rate`` and halves it whenever a step does
    not improve, for at most ``max_inner`` steps per round.
    """

    def __init__(self, scale=1.0, epochs=10, threshold=0.5, learning_rate=0.1, max_inner=100,
                 max_restarts=None, random_state=0):
        self.scale = scale
        self.epochs = epochs
        self.threshold = threshold
        self.learning_rate = learning_rate
        self.max_inner = max_inner
        self.max_restarts = max_restarts
        self.random_state = random_state

    def affinity(self, X, h=None):
        h = self.target_ if h is None else h
        d2 = np.sum((np.asarray(X, dtype=np.float64) - h) ** 2, axis=-1)
        return np.exp(-(self.scale**2) * d2)

    def log_dd(self, H, X, starts, bag_labels):
        """Log diverse density of each row of ``H``."""
        H = np.atleast_2d(H)
        aff = np.exp(-(self.scale**2) * squared_distances(H, X))
        best = _bag_max(aff, starts)
        pos = bag_labels == 1
        with np.errstate(divide="ignore"):
            return np.log(best[:, pos]).sum(axis=1) + np.log1p(-best[:, ~pos]).sum(axis=1)

    def fit(self, bags, y):
        bags, y = self._fit_common(bags, y)
        X = np.vstack(bags)
        starts = np.concatenate([[0], np.cumsum([len(b) for b in bags])[:-1]])
        seeds = np.vstack([b for b, lab in zip(bags, y) if lab == 1])
        if self.max_restarts is not None and self.max_restarts < len(seeds):
            rng = np.random.default_rng(self.random_state)
            seeds = seeds[np.sort(rng.choice(len(seeds), self.max_restarts, replace=False))]
        s2 = self.scale**2
        sign = np.where(y == 1, 1.0, -1.0)

        def objective(H, sel):
            # sel: (R, n_bags, d) selected instances
            q = s2 * np.sum((sel - H[:, None, :]) ** 2, axis=2)
            pos_term = -q[:, y == 1].sum(axis=1)
            with np.errstate(divide="ignore"):
                neg_term = np.log(-np.expm1(-q[:, y == 0])).sum(axis=1)
            return pos_term + neg_term

        def gradient(H, sel):
            diff = sel - H[:, None, :]
            q = s2 * np.sum(diff**2, axis=2)
            with np.errstate(divide="ignore", invalid="ignore"):
                w = np.where(sign > 0, 1.0, -np.exp(-q) / -np.expm1(-q))
            w = np.where(np.isfinite(w), w, 0.0)
            return 2 * s2 * np.einsum("rb,rbd->rd", w, diff)

        H = seeds.copy()
        best_H = H.copy()
        best_val = self.log_dd(H, X, starts, y)
        self.seed_log_dd_ = best_val.copy()
        prev_sel = None
        for _ in range(self.epochs):
            aff = np.exp(-s2 * squared_distances(H, X))
            sel_idx = np.stack(
                [starts[b] + np.argmax(aff[:, starts[b] : starts[b] + len(bags[b])], axis=1) for b in range(len(bags))],
                axis=1,
            )
            if prev_sel is not None and np.array_equal(sel_idx, prev_sel):
                break
            prev_sel = sel_idx
            sel = X[sel_idx]
            lr = np.full(len(H), self.learning_rate)
            val = objective(H, sel)
            for _ in range(self.max_inner):
                cand = H + lr[:, None] * gradient(H, sel)
                cand_val = objective(cand, sel)
                better = cand_val > val
                H = np.where(better[:, None], cand, H)
                val = np.where(better, cand_val, val)
                lr = np.where(better, lr, lr * 0.5)
                if np.all(lr < 1e-10):
                    break
            dd = self.log_dd(H, X, starts, y)
            improved = dd > best_val
            best_H[improved] = H[improved]
            best_val[improved] = dd[improved]
        winner = int(np.argmax(best_val))
        self.target_ = best_H[winner]
        self.log_dd_ = float(best_val[winner])
        self.restart_log_dd_ = best_val
        return self

    _state_attrs = ("target_", "log_dd_")

    def bag_affinity(self, bag):
        return float(self.affinity(getattr(bag, "X", bag)).max())

    def score_bags(self, bags):
        return np.array([self.bag_affinity(b) for b in self._check(bags)])

    def predict(self, bags):
        return (self.score_bags(bags) >= self.threshold).astype(np.int64)


# -- bag representations -------------------------------------------------------------


def mean_representation(bag, aggregate="mean"):
    """Coordinate-wise summary of a bag's instances."""
    X = np.asarray(getattr(bag, "X", bag), dtype=np.float64)
    if X.shape[0] == 0:
        raise ValidationError("empty bag")
    if aggregate == "mean":
        return X.mean(axis=0)
    if aggregate == "median":
        return np.median(X, axis=0)
    raise UnknownNameError(f"unknown aggregate {aggregate!r}")


class MeanBagClassifier(BagClassifier):
    """Summarize each bag by its mean instance and classify the summaries."""

    def __init__(self, estimator=None, aggregate="mean"):
        self.estimator = estimator
        self.aggregate = aggregate

    def _summaries(self, bags):
        return np.array([mean_representation(b, self.aggregate) for b in bags])

    def fit(self, bags, y):
        bags, y = self._fit_common(bags, y)
        est = self.estimator if self.estimator is not None else RandomForest()
        self.estimator_ = clone(est).fit(self._summaries(bags), y)
        return self

    def score_bags(self, bags):
        return self.estimator_.score_samples(self._summaries(self._check(bags)))

    get_state = MilToMl.get_state
    set_state = MilToMl.set_state


# -- construction ------------------------------------------------------------------

MIL_ALGORITHMS = ("citation_knn", "apr", "em_dd", "mean_repr_rf", "mean_repr_logreg", "mil_to_ml")


@dataclass(frozen=True)
class MilClassifierSpec:
    algorithm: str
    hyperparameters: dict = field(default_factory=dict)
    inner: ClassifierSpec | None = None

    def build(self):
        return make_mil_classifier(self.algorithm, inner=self.inner, **self.hyperparameters)


def make_mil_classifier(algorithm, inner=None, seed=0, **hyperparameters):
    if algorithm == "citation_knn":
        return CitationKNN(**hyperparameters)
    if algorithm == "apr":
        return APR(**hyperparameters)
    if algorithm == "em_dd":
        hyperparameters.setdefault("random_state", seed)
        return EMDD(**hyperparameters)
    if algorithm in ("mean_repr_rf", "mean_repr_logreg"):
        # anything but the aggregate configures the inner classifier
        outer = {k: hyperparameters.pop(k) for k in ("aggregate",) if k in hyperparameters}
        if inner:
            est = inner.build().set_params(**hyperparameters)
        elif algorithm == "mean_repr_rf":
            est = RandomForest(random_state=seed, **hyperparameters)
        else:
            est = LogisticRegression(**hyperparameters)
        return MeanBagClassifier(est, **outer)
    if algorithm == "mil_to_ml":
        est = inner.build() if inner else make_classifier("random_forest", seed=seed)
        return MilToMl(est.set_params(**hyperparameters))
    raise UnknownNameError(f"unknown MIL algorithm {algorithm!r}; choose from {MIL_ALGORITHMS}")
