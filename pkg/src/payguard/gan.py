"""Adversarial training loop and discriminator-based detection.

The generator maps latent noise to flattened images; the discriminator
maps flattened images to a probability of being real. Training alternates
discriminator and generator Adam steps on minibatches, with every random
draw funneled through one seeded stream so a run is a pure function of
(seed, config, dataset).
"""

import math
from dataclasses import dataclass, fields

from . import backend
from .errors import (ConfigError, DataError, DimensionError, DomainError,
                     NumericError)
from .nn import (AdamState, Network, adam_step, backward, bce_grad, bce_terms,
                 flatten_grads, forward)
from .rng import Rng, derive_seed
from .tensor import Tensor

DEFAULT_SEED = 7
DEFAULT_LATENT_DIM = 64
G_HIDDEN = (128, 256)
D_HIDDEN = (256, 128)
LOSS_VARIANTS = ("saturating", "non_saturating")
TRACE_EVERY = 100


class GanModel:
    """Generator/discriminator pair sharing one flattened image size."""

    __slots__ = ("generator", "discriminator", "latent_dim")

    def __init__(self, generator: Network, discriminator: Network,
                 latent_dim: int):
        if latent_dim <= 0:
            raise DomainError(f"latent_dim must be positive, got {latent_dim}")
        if generator.input_dim != latent_dim:
            raise DimensionError(
                f"generator consumes {generator.input_dim} dims but "
                f"latent_dim is {latent_dim}")
        if generator.output_dim != discriminator.input_dim:
            raise DimensionError(
                f"generator emits {generator.output_dim} dims but the "
                f"discriminator expects {discriminator.input_dim}")
        if discriminator.output_dim != 1:
            raise DimensionError(
                f"discriminator must emit one probability, got "
                f"{discriminator.output_dim}")
        self.generator = generator
        self.discriminator = discriminator
        self.latent_dim = latent_dim

    @property
    def image_dim(self):
        return self.generator.output_dim

    @classmethod
    def build(cls, image_dim: int, latent_dim: int = DEFAULT_LATENT_DIM,
              seed: int = DEFAULT_SEED) -> "GanModel":
        """Fresh default-architecture model with seeded initialization."""
        if image_dim <= 0:
            raise DomainError(f"image_dim must be positive, got {image_dim}")
        gen = Network.initialize(
            [latent_dim, *G_HIDDEN, image_dim],
            ["leaky_relu"] * len(G_HIDDEN) + ["tanh"],
            Rng(derive_seed(seed, "init", "generator")))
        disc = Network.initialize(
            [image_dim, *D_HIDDEN, 1],
            ["leaky_relu"] * len(D_HIDDEN) + ["sigmoid"],
            Rng(derive_seed(seed, "init", "discriminator")))
        return cls(gen, disc, latent_dim)

    def with_generator(self, generator: Network) -> "GanModel":
        return GanModel(generator, self.discriminator, self.latent_dim)

    def with_discriminator(self, discriminator: Network) -> "GanModel":
        return GanModel(self.generator, discriminator, self.latent_dim)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one adversarial training run."""

    iterations: int = 10_000
    batch_size: int = 64
    lr_g: float = 2e-4
    lr_d: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    d_steps_per_g_step: int = 1
    generator_loss_variant: str = "non_saturating"
    seed: int = DEFAULT_SEED
    threshold: float = 0.5

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigError(f"iterations must be >= 0, got {self.iterations}")
        if self.batch_size <= 0:
            raise ConfigError(f"batch_size must be positive, got {self.batch_size}")
        if self.lr_g <= 0 or self.lr_d <= 0:
            raise ConfigError(
                f"learning rates must be positive, got lr_g={self.lr_g}, "
                f"lr_d={self.lr_d}")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ConfigError(
                f"betas must lie in [0, 1), got {self.beta1}, {self.beta2}")
        if self.eps <= 0:
            raise ConfigError(f"eps must be positive, got {self.eps}")
        if self.d_steps_per_g_step < 1:
            raise ConfigError(
                f"d_steps_per_g_step must be >= 1, got {self.d_steps_per_g_step}")
        if self.generator_loss_variant not in LOSS_VARIANTS:
            raise ConfigError(
                f"generator_loss_variant must be one of {LOSS_VARIANTS}, "
                f"got {self.generator_loss_variant!r}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(
                f"threshold must lie in (0, 1), got {self.threshold}")

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown TrainConfig keys: {', '.join(unknown)}")
        return cls(**raw)


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    d_loss: float
    g_loss: float
    d_batch_accuracy: float


@dataclass(frozen=True)
class TrainResult:
    """Everything needed to inspect, persist, or resume a finished run."""

    model: GanModel
    trace: tuple
    d_state: AdamState
    g_state: AdamState
    rng_state: int
    iteration: int


def sample_latent(batch: int, latent_dim: int, rng: Rng) -> Tensor:
    """[batch x latent_dim] of i.i.d. standard normals from rng."""
    if batch <= 0 or latent_dim <= 0:
        raise DomainError(
            f"batch and latent_dim must be positive, got {batch}, {latent_dim}")
    return Tensor._wrap((batch, latent_dim), rng.normals(batch * latent_dim))


def _d_pass(model: GanModel, x_real: Tensor, z: Tensor):
    """Discriminator loss, flat D gradients, and both probability batches."""
    if x_real.shape[0] != z.shape[0]:
        raise DimensionError(
            f"real batch {x_real.shape[0]} and latent batch {z.shape[0]} differ")
    disc = model.discriminator
    x_fake, _ = forward(model.generator, z)
    p_real, tape_real = forward(disc, x_real)
    p_fake, tape_fake = forward(disc, x_fake)
    loss = -(bce_terms(p_real, True) + bce_terms(p_fake, False))
    grads_real, _ = backward(disc, tape_real, bce_grad(p_real, True).scale(-1.0))
    grads_fake, _ = backward(disc, tape_fake, bce_grad(p_fake, False).scale(-1.0))
    grads = [a + b for a, b in
             zip(flatten_grads(grads_real), flatten_grads(grads_fake))]
    return loss, grads, p_real, p_fake


def discriminator_loss(model: GanModel, x_real: Tensor, z: Tensor):
    """Loss the discriminator minimizes, with its parameter gradients.

    The value is -[mean log D(x_real) + mean log(1 - D(G(z)))]; the
    generator is treated as a constant, so no gradient reaches it.
    """
    loss, grads, _, _ = _d_pass(model, x_real, z)
    return loss, grads


def generator_loss(model: GanModel, z: Tensor, variant: str):
    """Loss the generator minimizes, with its parameter gradients.

    saturating: mean log(1 - D(G(z))), the adversarial value as written;
    non_saturating: -mean log D(G(z)), same fixed points but a stronger
    gradient when the discriminator confidently rejects fakes. D's
    parameters receive no gradient either way.
    """
    if variant not in LOSS_VARIANTS:
        raise DomainError(
            f"variant must be one of {LOSS_VARIANTS}, got {variant!r}")
    gen, disc = model.generator, model.discriminator
    x_fake, tape_gen = forward(gen, z)
    p_fake, tape_disc = forward(disc, x_fake)
    if variant == "saturating":
        loss = bce_terms(p_fake, False)
        dl_dp = bce_grad(p_fake, False)
    else:
        loss = -bce_terms(p_fake, True)
        dl_dp = bce_grad(p_fake, True).scale(-1.0)
    _, dl_dx = backward(disc, tape_disc, dl_dp,
                        need_param_grads=False, need_input_grad=True)
    grads, _ = backward(gen, tape_gen, dl_dx)
    return loss, flatten_grads(grads)


def _batch_accuracy(p_real: Tensor, p_fake: Tensor, threshold: float) -> float:
    right = sum(1 for v in p_real.data if v >= threshold)
    right += sum(1 for v in p_fake.data if v < threshold)
    return right / (p_real.size + p_fake.size)


def _d_update(model, x_real, z, state, config):
    """One discriminator Adam step; returns (model, state, loss, accuracy)."""
    loss, grads, p_real, p_fake = _d_pass(model, x_real, z)
    params, state = adam_step(model.discriminator.params(), grads, state,
                              config.lr_d, config.beta1, config.beta2,
                              config.eps)
    updated = model.with_discriminator(model.discriminator.set_params(params))
    return updated, state, loss, _batch_accuracy(p_real, p_fake,
                                                 config.threshold)


def _g_update(model, z, state, config):
    """One generator Adam step; returns (model, state, loss)."""
    loss, grads = generator_loss(model, z, config.generator_loss_variant)
    params, state = adam_step(model.generator.params(), grads, state,
                              config.lr_g, config.beta1, config.beta2,
                              config.eps)
    return model.with_generator(model.generator.set_params(params)), state, loss


def _real_training_pool(dataset, image_dim) -> Tensor:
    """Flattened [N x image_dim] of the real images in the train split."""
    rows = [i for i, (label, split) in
            enumerate(zip(dataset.labels, dataset.split))
            if label == 1 and split == "train"]
    n, h, w = dataset.images.shape
    if h * w != image_dim:
        raise DimensionError(
            f"dataset images are {h}x{w} but the model expects "
            f"{image_dim} pixels")
    return dataset.images.take(rows).reshape((len(rows), image_dim))


def warm_start_generator(model: GanModel, x_real: Tensor) -> GanModel:
    """Model with the generator's output bias moved to the mean of x_real.

    Freshly initialized hidden layers contribute almost nothing, so the
    generator's first samples sit at the sample mean instead of gray and
    adversarial updates go toward per-sample structure from the start.
    Requires a tanh output layer.
    """
    last = model.generator.layers[-1]
    if last.activation != "tanh":
        raise DomainError(
            f"warm start needs a tanh output layer, got {last.activation!r}")
    n, dim = x_real.shape
    if n == 0:
        raise DomainError("x_real must contain at least one row")
    if dim != model.image_dim:
        raise DimensionError(
            f"x_real rows have {dim} pixels but the model expects "
            f"{model.image_dim}")
    sums = backend.kernels.colsum(x_real.data, n, dim)
    cap = 1.0 - 1e-9
    bias = Tensor((dim,), [math.atanh(min(cap, max(-cap, v / n)))
                           for v in sums])
    layers = model.generator.layers[:-1] + (last.with_params(last.weights,
                                                             bias),)
    return model.with_generator(Network(layers))


def train(model: GanModel, dataset, config: TrainConfig,
          start: TrainResult = None) -> TrainResult:
    """Run the alternating-update loop for config.iterations minibatches.

    Each iteration takes config.d_steps_per_g_step discriminator steps
    (fresh real minibatch and fresh noise per step) followed by one
    generator step on fresh noise. Minibatches are drawn with replacement.
    A fresh run first warm-starts the generator's output bias on the real
    pool. Passing a previous TrainResult as start resumes that run
    exactly: optimizer moments, rng position, and iteration counter all
    continue (with no second warm start).
    """
    pool = _real_training_pool(dataset, model.image_dim)
    if pool.shape[0] == 0:
        raise DataError("train split contains no real images")
    if pool.shape[0] < config.batch_size:
        raise DataError(
            f"train split has {pool.shape[0]} real images; batch_size "
            f"{config.batch_size} needs at least that many")

    if start is None:
        if config.iterations > 0:
            model = warm_start_generator(model, pool)
        rng = Rng(derive_seed(config.seed, "train"))
        d_state = AdamState.fresh(model.discriminator.params())
        g_state = AdamState.fresh(model.generator.params())
        first = 1
        trace = []
    else:
        model = start.model
        rng = Rng.from_state(start.rng_state)
        d_state, g_state = start.d_state, start.g_state
        first = start.iteration + 1
        trace = list(start.trace)

    n_pool = pool.shape[0]
    d_loss = g_loss = d_acc = 0.0
    it = first - 1
    for it in range(first, config.iterations + 1):
        try:
            for _ in range(config.d_steps_per_g_step):
                idx = rng.randints(config.batch_size, n_pool)
                z = sample_latent(config.batch_size, model.latent_dim, rng)
                model, d_state, d_loss, d_acc = _d_update(
                    model, pool.take(idx), z, d_state, config)
            z = sample_latent(config.batch_size, model.latent_dim, rng)
            model, g_state, g_loss = _g_update(model, z, g_state, config)
        except NumericError as err:
            raise NumericError(f"iteration {it}: {err}") from err
        if not math.isfinite(d_loss) or not math.isfinite(g_loss):
            raise NumericError(
                f"iteration {it}: non-finite loss d={d_loss} g={g_loss}")
        if it % TRACE_EVERY == 0:
            trace.append(TraceEntry(it, d_loss, g_loss, d_acc))
    return TrainResult(model, tuple(trace), d_state, g_state, rng.state, it)


def detect(model: GanModel, images: Tensor, threshold: float = 0.5):
    """Score a batch of flattened images; label real iff score >= threshold.

    Returns one (score, label) pair per row, where the score is the
    discriminator's probability that the image is real.
    """
    if not 0.0 <= threshold <= 1.0:
        raise DomainError(f"threshold must lie in [0, 1], got {threshold}")
    if images.rank != 2 or images.shape[1] != model.image_dim:
        raise DimensionError(
            f"detect expects [n x {model.image_dim}] images, got {images.shape}")
    scores, _ = forward(model.discriminator, images)
    return [(s, "real" if s >= threshold else "fake") for s in scores.data]
