"""Deep clarity and conciseness classifiers.

Clarity: title and merged-category Phrase2Mat matrices, attentively pooled
both raw and after a shared tanh CNN, stacked with standardized engineered
features, then a ReLU MLP with a 2-way softmax.

Conciseness: CNN + max-over-time on the semantic (cosine) and syntactic
(Jaro-Winkler) token-relation matrices, a CNN -> width-2 max pool -> LSTM
branch over the title embeddings, stacked with standardized engineered
features, then a ReLU MLP with a sigmoid unit.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .embed import EmbeddingStore, norm01, phrase_matrix
from .jaro import pairwise_jaro_winkler
from .tensor import container
from .tensor.layers import (
    attentive_pool_backward,
    attentive_pool_forward,
    conv1d_backward,
    conv1d_forward,
    cross_entropy,
    dense_stack_backward,
    dense_stack_forward,
    glorot,
    lstm_backward,
    lstm_forward,
    pool_backward,
    pool_forward,
)
from .tensor.optim import AdamState, adam_step

TASKS = ("clarity", "conciseness")


@dataclass
class DeepHyperParams:
    task: str = "clarity"
    n: int = 300
    max_title_len: int = 45
    max_cat_len: int = 10
    filter_width: int = 3
    n_filters: int = 100
    lstm_hidden: int = 128
    mlp_layers: int = 5
    mlp_width: int = 10
    lr: float = 1e-4
    dropout_cnn: float = 0.2
    dropout_lstm: float = 0.0
    dropout_embedding: float = 0.0
    tune_embeddings: bool = False
    epochs: int = 10
    batch_size: int = 32
    patience: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        for name in ("n", "max_title_len", "max_cat_len", "filter_width", "n_filters", "lstm_hidden",
                     "mlp_layers", "mlp_width", "epochs", "batch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.max_title_len < self.filter_width:
            raise ValueError("max_title_len must be at least filter_width")
        if self.task == "conciseness" and self.max_title_len - self.filter_width + 1 < 2:
            raise ValueError("conciseness model needs a conv output at least 2 wide")
        for name in ("dropout_cnn", "dropout_lstm", "dropout_embedding"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in [0, 1)")
        if self.lr < 0:
            raise ValueError("lr must be non-negative")

    @classmethod
    def defaults(cls, task: str, **overrides) -> "DeepHyperParams":
        if task == "clarity":
            base = dict(task=task, n_filters=100, mlp_layers=5, mlp_width=10, dropout_cnn=0.2)
        elif task == "conciseness":
            base = dict(task=task, n_filters=128, lstm_hidden=128, mlp_layers=3, mlp_width=50,
                        dropout_cnn=0.2, dropout_lstm=0.2, dropout_embedding=0.5, tune_embeddings=True)
        else:
            raise ValueError(f"unknown task {task!r}")
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, d: dict) -> "DeepHyperParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown deep hyperparameters: {sorted(unknown)}")
        return cls(**d)


def r_final_dim(hyper: DeepHyperParams, sh: int) -> int:
    if hyper.task == "clarity":
        return 2 * hyper.n + 2 * hyper.n_filters + sh
    return hyper.lstm_hidden + 2 * hyper.n_filters + sh


# ------------------------------------------------------------------ inputs


@dataclass
class P2MPair:
    T: np.ndarray  # (n, M')
    C: np.ndarray  # (n, N')


@dataclass
class RelationMatrices:
    SEM: np.ndarray  # (M, M)
    SYN: np.ndarray  # (M, M)
    n_tokens: int


def _nonempty(mat: np.ndarray, dim: int) -> np.ndarray:
    return mat if mat.shape[1] else np.zeros((dim, 1))


def build_p2m(title_tokens, cat_tokens, store: EmbeddingStore, hyper: DeepHyperParams) -> P2MPair:
    """Title and joined-category matrices; a fully OOV side becomes one zero column."""
    if isinstance(cat_tokens, (list, tuple)) and cat_tokens and isinstance(cat_tokens[0], (list, tuple)):
        cat_tokens = [t for level in cat_tokens for t in level]
    T = phrase_matrix(title_tokens, store, hyper.max_title_len)
    C = phrase_matrix(cat_tokens, store, hyper.max_cat_len)
    return P2MPair(_nonempty(T, store.dim), _nonempty(C, store.dim))


def build_relation_matrices(title_tokens, store: EmbeddingStore, hyper: DeepHyperParams) -> RelationMatrices:
    """SEM/SYN over the title's in-vocabulary tokens, zero-padded to (M, M)."""
    kept = [t for t in title_tokens if t in store][:hyper.max_title_len]
    M = hyper.max_title_len
    SEM = np.zeros((M, M))
    SYN = np.zeros((M, M))
    k = len(kept)
    if k:
        U = store.unit_matrix(kept)
        SEM[:k, :k] = norm01(np.clip(U @ U.T, -1.0, 1.0))
        SYN[:k, :k] = pairwise_jaro_winkler([t.lower() for t in kept])
    return RelationMatrices(SEM, SYN, k)


@dataclass
class ClaritySample:
    pair: P2MPair
    feats: np.ndarray


@dataclass
class ConcisenessSample:
    rel: RelationMatrices
    token_ids: np.ndarray  # (M,) int, 0 = padding
    feats: np.ndarray


def _pad_to_width(X: np.ndarray, width: int) -> np.ndarray:
    if X.shape[1] >= width:
        return X
    return np.hstack([X, np.zeros((X.shape[0], width - X.shape[1]))])


# ------------------------------------------------------------------- model


class NotFittedError(RuntimeError):
    pass


@dataclass
class DeepModel:
    hyper: DeepHyperParams
    sh: int
    params: dict = field(default_factory=dict)
    vocab: list = field(default_factory=list)  # conciseness embedding rows; index 0 is padding
    feat_mean: np.ndarray | None = None
    feat_std: np.ndarray | None = None
    fitted: bool = False

    @property
    def task(self) -> str:
        return self.hyper.task

    @property
    def head(self) -> str:
        return "softmax2" if self.task == "clarity" else "sigmoid1"

    # ---- construction

    @classmethod
    def initialize(cls, hyper: DeepHyperParams, sh: int, embedding: np.ndarray | None = None,
                   vocab: list | None = None) -> "DeepModel":
        rng = np.random.default_rng([hyper.seed, 1])
        F, n, h = hyper.n_filters, hyper.n, hyper.filter_width
        p: dict[str, np.ndarray] = {}
        if hyper.task == "clarity":
            p["U_w2v"] = glorot(rng, (n, n), n, n)
            p["conv_W"] = glorot(rng, (F, n, h), n * h, F * h)
            p["conv_b"] = np.zeros(F)
            p["U_cnn"] = glorot(rng, (F, F), F, F)
        else:
            M, H = hyper.max_title_len, hyper.lstm_hidden
            if embedding is None:
                embedding = np.zeros((1, n))
            if embedding.shape[1] != n:
                raise ValueError("embedding width does not match hyper.n")
            p["embedding"] = np.array(embedding, dtype=np.float64)
            p["embedding"][0] = 0.0
            for name in ("sem", "syn"):
                p[f"{name}_W"] = glorot(rng, (F, M, h), M * h, F * h)
                p[f"{name}_b"] = np.zeros(F)
            p["title_W"] = glorot(rng, (F, n, h), n * h, F * h)
            p["title_b"] = np.zeros(F)
            d = (M - h + 1) // 2
            p["lstm_Wx"] = glorot(rng, (4 * H, d), d, 4 * H)
            p["lstm_Wh"] = glorot(rng, (4 * H, H), H, 4 * H)
            p["lstm_b"] = np.zeros(4 * H)
        width_in = r_final_dim(hyper, sh)
        for k in range(hyper.mlp_layers):
            p[f"mlp_W{k}"] = glorot(rng, (hyper.mlp_width, width_in), width_in, hyper.mlp_width)
            p[f"mlp_b{k}"] = np.zeros(hyper.mlp_width)
            width_in = hyper.mlp_width
        n_out = 2 if hyper.task == "clarity" else 1
        p["out_W"] = glorot(rng, (n_out, width_in), width_in, n_out)
        p["out_b"] = np.zeros(n_out)
        return cls(hyper=hyper, sh=sh, params=p, vocab=list(vocab or [""]))

    # ---- sample preparation

    def standardize(self, feats: np.ndarray) -> np.ndarray:
        if self.feat_mean is None:
            return feats
        return (feats - self.feat_mean) / self.feat_std

    def fit_standardizer(self, feats: np.ndarray) -> None:
        self.feat_mean = feats.mean(axis=0)
        std = feats.std(axis=0)
        self.feat_std = np.where(std > 0, std, 1.0)

    def make_samples(self, tokenized_titles, cat_tokens, feats: np.ndarray, store: EmbeddingStore):
        """Build model inputs. ``feats`` are raw task-subset features (standardized here)."""
        feats = self.standardize(np.asarray(feats, dtype=np.float64))
        out = []
        if self.task == "clarity":
            for toks, cats, f in zip(tokenized_titles, cat_tokens, feats):
                out.append(ClaritySample(build_p2m(toks, cats, store, self.hyper), f))
            return out
        index = {t: i for i, t in enumerate(self.vocab) if i > 0}
        M = self.hyper.max_title_len
        for toks, f in zip(tokenized_titles, feats):
            ids = [index[t] for t in toks if t in index][:M]
            arr = np.zeros(M, dtype=np.int64)
            arr[:len(ids)] = ids
            out.append(ConcisenessSample(build_relation_matrices(toks, store, self.hyper), arr, f))
        return out

    # ---- forward / backward

    def _forward(self, s, train: bool, rng: np.random.Generator | None):
        p = self.params
        hp = self.hyper
        masks = {}

        def mask(key, shape, rate):
            if not train or rng is None or rate == 0.0:
                return None
            keep = rng.random(shape) >= rate
            m = keep / (1.0 - rate)
            masks[key] = m
            return m

        cache = {}
        if self.task == "clarity":
            h = hp.filter_width
            (rT1, rC1), cache["attn1"] = attentive_pool_forward(s.pair.T, s.pair.C, p["U_w2v"])
            FT, cache["convT"] = conv1d_forward(_pad_to_width(s.pair.T, h), p["conv_W"], p["conv_b"])
            FC, cache["convC"] = conv1d_forward(_pad_to_width(s.pair.C, h), p["conv_W"], p["conv_b"])
            mT = mask("cnnT", FT.shape, hp.dropout_cnn)
            mC = mask("cnnC", FC.shape, hp.dropout_cnn)
            FTd = FT if mT is None else FT * mT
            FCd = FC if mC is None else FC * mC
            (rT2, rC2), cache["attn2"] = attentive_pool_forward(FTd, FCd, p["U_cnn"])
            r = np.concatenate([rT1, rC1, rT2, rC2, s.feats])
        else:
            F = hp.n_filters
            reps = []
            for name, mat in (("sem", s.rel.SEM), ("syn", s.rel.SYN)):
                fm, cache[f"conv_{name}"] = conv1d_forward(mat, p[f"{name}_W"], p[f"{name}_b"])
                m = mask(f"cnn_{name}", fm.shape, hp.dropout_cnn)
                fmd = fm if m is None else fm * m
                v, cache[f"pool_{name}"] = pool_forward(fmd, "max_over_time_rows")
                reps.append(v)
            X = p["embedding"][s.token_ids].T * (s.token_ids > 0)[None, :]  # (n, M); padding stays zero
            me = mask("emb", (X.shape[1],), hp.dropout_embedding)
            Xd = X if me is None else X * me[None, :]
            Ft, cache["conv_title"] = conv1d_forward(Xd, p["title_W"], p["title_b"])
            mt = mask("cnn_title", Ft.shape, hp.dropout_cnn)
            Ftd = Ft if mt is None else Ft * mt
            Y, cache["pool_title"] = pool_forward(Ftd, "max_pool_width2")
            lm = mask("lstm", (F, hp.lstm_hidden), hp.dropout_lstm)
            hT, cache["lstm"] = lstm_forward(Y, p["lstm_Wx"], p["lstm_Wh"], p["lstm_b"], lm)
            r = np.concatenate([reps[0], reps[1], hT, s.feats])
        layers = [(p[f"mlp_W{k}"], p[f"mlp_b{k}"], "relu") for k in range(hp.mlp_layers)]
        layers.append((p["out_W"], p["out_b"], "linear"))
        probs, logits, cache["mlp"] = dense_stack_forward(r, layers, self.head)
        cache["masks"] = masks
        return r, probs, logits, cache

    def _backward(self, s, dlogits, cache) -> dict:
        p = self.params
        hp = self.hyper
        g: dict[str, np.ndarray] = {}
        masks = cache["masks"]
        dr, layer_grads = dense_stack_backward(dlogits, cache["mlp"])
        for k in range(hp.mlp_layers):
            g[f"mlp_W{k}"], g[f"mlp_b{k}"] = layer_grads[k]
        g["out_W"], g["out_b"] = layer_grads[-1]
        if self.task == "clarity":
            n, F = hp.n, hp.n_filters
            o = 0
            drT1, drC1 = dr[o:o + n], dr[o + n:o + 2 * n]
            o += 2 * n
            drT2, drC2 = dr[o:o + F], dr[o + F:o + 2 * F]
            _, _, g["U_w2v"] = attentive_pool_backward(drT1, drC1, cache["attn1"])
            dFT, dFC, g["U_cnn"] = attentive_pool_backward(drT2, drC2, cache["attn2"])
            if "cnnT" in masks:
                dFT = dFT * masks["cnnT"]
            if "cnnC" in masks:
                dFC = dFC * masks["cnnC"]
            _, dW1, db1 = conv1d_backward(dFT, cache["convT"])
            _, dW2, db2 = conv1d_backward(dFC, cache["convC"])
            g["conv_W"] = dW1 + dW2
            g["conv_b"] = db1 + db2
            return g
        F, H = hp.n_filters, hp.lstm_hidden
        for i, name in enumerate(("sem", "syn")):
            dv = dr[i * F:(i + 1) * F]
            dfm = pool_backward(dv, cache[f"pool_{name}"])
            if f"cnn_{name}" in masks:
                dfm = dfm * masks[f"cnn_{name}"]
            _, g[f"{name}_W"], g[f"{name}_b"] = conv1d_backward(dfm, cache[f"conv_{name}"])
        dh = dr[2 * F:2 * F + H]
        dY, g["lstm_Wx"], g["lstm_Wh"], g["lstm_b"] = lstm_backward(dh, cache["lstm"])
        dFt = pool_backward(dY, cache["pool_title"])
        if "cnn_title" in masks:
            dFt = dFt * masks["cnn_title"]
        dX, g["title_W"], g["title_b"] = conv1d_backward(dFt, cache["conv_title"])
        if hp.tune_embeddings:
            if "emb" in masks:
                dX = dX * masks["emb"][None, :]
            dE = np.zeros_like(p["embedding"])
            keep = s.token_ids > 0
            np.add.at(dE, s.token_ids[keep], dX.T[keep])
            g["embedding"] = dE
        return g

    def representation(self, sample) -> np.ndarray:
        """The stacked r_final vector fed to the MLP (eval mode)."""
        return self._forward(sample, False, None)[0]

    def sample_loss(self, sample, y: int, train: bool = False, rng: np.random.Generator | None = None):
        _, probs, logits, cache = self._forward(sample, train, rng)
        loss, dlogits = cross_entropy(logits, int(y), self.head)
        return loss, self._backward(sample, dlogits, cache), probs

    def loss_and_grads(self, samples, labels, train: bool = False, rng: np.random.Generator | None = None):
        """Mean cross-entropy over ``samples`` and its gradient w.r.t. every trainable parameter."""
        total = 0.0
        acc: dict[str, np.ndarray] = {}
        for s, y in zip(samples, labels):
            loss, g, _ = self.sample_loss(s, y, train, rng)
            total += loss
            for k, v in g.items():
                if k in acc:
                    acc[k] += v
                else:
                    acc[k] = v.copy()
        m = len(samples)
        return total / m, {k: v / m for k, v in acc.items()}

    def forward_proba(self, sample) -> float:
        """Probability of the positive class, eval mode (no dropout)."""
        probs = self._forward(sample, False, None)[1]
        return float(probs[1] if self.task == "clarity" else probs[0])

    def predict_proba(self, samples) -> np.ndarray:
        if not self.fitted:
            raise NotFittedError("deep model has not been trained")
        return np.array([self.forward_proba(s) for s in samples])

    # ---- persistence

    def header(self) -> dict:
        return {
            "task": self.task,
            "hyper": asdict(self.hyper),
            "sh": self.sh,
            "vocab": self.vocab,
            "feat_mean": None if self.feat_mean is None else self.feat_mean.tolist(),
            "feat_std": None if self.feat_std is None else self.feat_std.tolist(),
            "fitted": self.fitted,
            "param_order": list(self.params),
        }

    def save(self, params_path: str | Path, header_path: str | Path) -> None:
        container.save(params_path, self.params)
        Path(header_path).write_text(json.dumps(self.header(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, params_path: str | Path, header_path: str | Path) -> "DeepModel":
        hd = json.loads(Path(header_path).read_text(encoding="utf-8"))
        params = container.load(params_path)
        if list(params) != hd["param_order"]:
            raise ValueError("parameter container does not match model header")
        model = cls(hyper=DeepHyperParams.from_dict(hd["hyper"]), sh=int(hd["sh"]), params=params,
                    vocab=list(hd["vocab"]), fitted=bool(hd["fitted"]))
        if hd["feat_mean"] is not None:
            model.feat_mean = np.array(hd["feat_mean"])
            model.feat_std = np.array(hd["feat_std"])
        return model


def build_vocab(tokenized_titles, store: EmbeddingStore) -> tuple[list, np.ndarray]:
    """Embedding-layer vocabulary: padding row, then sorted in-store training tokens."""
    toks = sorted({t for title in tokenized_titles for t in title if t in store})
    vocab = [""] + toks
    E = np.zeros((len(vocab), store.dim))
    for i, t in enumerate(toks, start=1):
        E[i] = store.get(t)
    return vocab, E


def rmse(p, y) -> float:
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(np.sqrt(np.mean((p - y) ** 2)))


def train(model: DeepModel, samples, labels, val_samples=None, val_labels=None, log=None) -> list[float]:
    """Mini-batch Adam on mean cross-entropy. Returns the per-epoch mean training loss.

    With a validation set, training stops after ``patience`` epochs without a
    holdout-RMSE improvement and the best parameters are restored.
    """
    hp = model.hyper
    if not samples:
        raise ValueError("cannot train on an empty dataset")
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != len(samples):
        raise ValueError("samples and labels differ in length")
    rng = np.random.default_rng([hp.seed, 2])
    drop_rng = np.random.default_rng([hp.seed, 3])
    state = AdamState(lr=hp.lr)
    history: list[float] = []
    best = (np.inf, None)
    stale = 0
    step = 0
    model.fitted = True
    for epoch in range(hp.epochs):
        order = rng.permutation(len(samples))
        total = 0.0
        for start in range(0, len(order), hp.batch_size):
            batch = order[start:start + hp.batch_size]
            loss, grads = model.loss_and_grads([samples[i] for i in batch], labels[batch], train=True, rng=drop_rng)
            step += 1
            if not np.isfinite(loss):
                raise FloatingPointError(f"non-finite loss at step {step}")
            if not hp.tune_embeddings:
                grads.pop("embedding", None)
            adam_step(model.params, grads, state)
            total += loss * len(batch)
        history.append(total / len(samples))
        if log is not None:
            log(f"epoch {epoch + 1}: train loss {history[-1]:.6f}")
        if val_samples:
            score = rmse(model.predict_proba(val_samples), val_labels)
            if score < best[0]:
                best = (score, {k: v.copy() for k, v in model.params.items()})
                stale = 0
            else:
                stale += 1
                if stale >= hp.patience:
                    break
    if best[1] is not None:
        model.params = best[1]
    return history
