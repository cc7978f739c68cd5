"""Release acceptance gate: eight criteria the shipped defaults must meet.

Each test computes its verdict, records one PASS/FAIL line (printed in
the terminal summary by conftest), and then asserts. Tolerances are
pinned here and nowhere else; the heavyweight fixtures (default corpus,
full-length reference training run) are module-scoped so the expensive
work happens once.
"""

import math
import random
import time

import pytest

from gradcheck import FD_H, REL_TOL, fd_param_grads, max_rel_err, random_net_case
from payguard.checkpoint import Checkpoint, load, save
from payguard.cli import evaluate_split
from payguard.data import CorpusSpec, Dataset, generate_corpus, split
from payguard.gan import (GanModel, TrainConfig, discriminator_loss,
                          generator_loss, sample_latent, train)
from payguard.metrics import ConfusionMatrix, auc, ratios, roc_curve
from payguard.nn import DenseLayer, Network, backward, flatten_grads, forward
from payguard.rng import Rng, derive_seed
from payguard.tensor import Tensor

RESULTS = []

DEFAULT_SPLIT = (0.8, 0.1, 0.1)
TIME_BUDGET_SECONDS = 600.0


def _record(criterion, ok, detail):
    RESULTS.append((criterion, ok, detail))
    assert ok, f"criterion {criterion}: {detail}"


@pytest.fixture(scope="module")
def default_corpus():
    """The shipped default corpus, split with the shipped defaults."""
    spec = CorpusSpec()
    start = time.perf_counter()
    dataset = split(generate_corpus(spec), DEFAULT_SPLIT, spec.seed)
    return dataset, time.perf_counter() - start


@pytest.fixture(scope="module")
def reference_run(default_corpus):
    """One full default-config training run, wall-clock included."""
    dataset, gen_seconds = default_corpus
    model = GanModel.build(dataset.height * dataset.width)
    start = time.perf_counter()
    result = train(model, dataset, TrainConfig())
    return result, gen_seconds + (time.perf_counter() - start)


def test_default_run_detects_manipulations(default_corpus, reference_run):
    dataset, _ = default_corpus
    result, seconds = reference_run
    start = time.perf_counter()
    report = evaluate_split(result.model, dataset, "test")
    seconds += time.perf_counter() - start
    ok = (report.accuracy >= 0.95 and report.auc >= 0.97
          and seconds <= TIME_BUDGET_SECONDS)
    _record(1, ok,
            f"accuracy={report.accuracy:.4f} (need >=0.95) "
            f"auc={report.auc:.4f} (need >=0.97) "
            f"wall={seconds:.1f}s (budget {TIME_BUDGET_SECONDS:.0f}s)")


def test_f1_at_reference_operating_point():
    # tp/(tp+fp) = 23111/24200 and tp/(tp+fn) = 23111/23875 hit the
    # stated precision and recall without rounding.
    r = ratios(ConfusionMatrix(tp=23111, fp=1089, fn=764, tn=24964))
    ok = (r.precision == 0.955 and r.recall == 0.968
          and abs(r.f1 - 0.9615) <= 0.0005)
    _record(2, ok,
            f"precision={r.precision} recall={r.recall} "
            f"f1={r.f1:.6f} (need 0.9615 +/- 0.0005)")


def _smooth_pair(seed):
    """Small all-smooth generator/discriminator pair for differencing."""
    rng = Rng(derive_seed(seed, "accept-pair"))
    latent = 2 + rng.randint(3)
    image = 2 + rng.randint(3)
    g_hidden = 2 + rng.randint(6)
    d_hidden = 2 + rng.randint(6)
    gen = Network.initialize([latent, g_hidden, image], ["tanh", "tanh"],
                             Rng(derive_seed(seed, "ag")), weight_scale=0.5)
    disc = Network.initialize([image, d_hidden, 1], ["tanh", "sigmoid"],
                              Rng(derive_seed(seed, "ad")), weight_scale=0.5)
    return GanModel(gen, disc, latent)


def test_gradients_match_finite_differences_at_scale():
    checks = 0
    worst = 0.0

    def mean_square(y):
        return sum(v * v for v in y.data) / y.size

    for seed in range(84):
        net, x = random_net_case(seed + 1000)
        y, tape = forward(net, x)
        analytic, _ = backward(net, tape, y.scale(2.0 / y.size))

        def loss(plist, net=net, x=x):
            out, _ = forward(net.set_params(plist), x)
            return mean_square(out)

        numeric = fd_param_grads(loss, net.params(), FD_H)
        worst = max(worst, max_rel_err(flatten_grads(analytic), numeric))
        checks += 1

    for seed in range(8):
        model = _smooth_pair(seed)
        z = sample_latent(3, model.latent_dim, Rng(derive_seed(seed, "az")))
        x = Tensor((3, model.image_dim),
                   [0.4 * v for v in
                    Rng(derive_seed(seed, "ax")).normals(3 * model.image_dim)])

        for variant in ("saturating", "non_saturating"):
            _, grads = generator_loss(model, z, variant)

            def g_loss(plist, model=model, z=z, variant=variant):
                moved = model.with_generator(model.generator.set_params(plist))
                return generator_loss(moved, z, variant)[0]

            numeric = fd_param_grads(g_loss, model.generator.params(), FD_H)
            worst = max(worst, max_rel_err(grads, numeric))
            checks += 1

        _, grads = discriminator_loss(model, x, z)

        def d_loss(plist, model=model, x=x, z=z):
            moved = model.with_discriminator(
                model.discriminator.set_params(plist))
            return discriminator_loss(moved, x, z)[0]

        numeric = fd_param_grads(d_loss, model.discriminator.params(), FD_H)
        worst = max(worst, max_rel_err(grads, numeric))
        checks += 1

    ok = checks >= 100 and worst < REL_TOL
    _record(3, ok,
            f"{checks} finite-difference checks (need >=100), "
            f"max rel err {worst:.3e} (need < {REL_TOL})")


def test_auc_equals_pair_counting_across_seeds():
    worst = 0.0
    sets = 0
    sizes = set()
    for seed in range(1000):
        r = random.Random(seed)
        n = 2 + seed % 199
        labels = [0, 1] + [r.randint(0, 1) for _ in range(n - 2)]
        r.shuffle(labels)
        regime = seed % 4
        if regime == 0:
            scores = [r.random() for _ in range(n)]
        elif regime == 1:
            scores = [r.randint(0, 6) / 6.0 for _ in range(n)]
        elif regime == 2:
            scores = [0.37] * n
        else:
            scores = [0.75 + 0.25 * r.random() if v == 0
                      else 0.25 * r.random() for v in labels]

        area = auc(roc_curve(scores, labels))
        pos = [s for s, v in zip(scores, labels) if v == 0]
        neg = [s for s, v in zip(scores, labels) if v == 1]
        credit = 0.0
        for p in pos:
            for q in neg:
                credit += 1.0 if p > q else (0.5 if p == q else 0.0)
        pair = credit / (len(pos) * len(neg))
        if seed % 4 == 3:
            assert area == 1.0
        if seed % 4 == 2:
            assert area == 0.5
        worst = max(worst, abs(area - pair))
        sets += 1
        sizes.add(n)

    ok = sets >= 1000 and worst <= 1e-9 and min(sizes) == 2 and max(sizes) == 200
    _record(4, ok,
            f"{sets} score sets, sizes {min(sizes)}..{max(sizes)}, "
            f"max |trapezoid - pair counting| = {worst:.3e} (need <= 1e-9)")


def test_uninformative_discriminator_loss_constants():
    gen = Network.initialize([3, 4, 2], ["tanh", "tanh"], Rng(61),
                             weight_scale=0.5)
    coin_flip = Network((DenseLayer(Tensor.zeros((1, 2)),
                                    Tensor.zeros((1,)), "sigmoid"),))
    model = GanModel(gen, coin_flip, latent_dim=3)
    x = Tensor((5, 2), Rng(62).normals(10))
    z = sample_latent(5, 3, Rng(63))

    d_loss, _ = discriminator_loss(model, x, z)
    g_sat, _ = generator_loss(model, z, "saturating")
    d_err = abs(d_loss - 2.0 * math.log(2.0))
    g_err = abs(g_sat - math.log(0.5))
    ok = d_err <= 1e-12 and g_err <= 1e-12
    _record(5, ok,
            f"|d_loss - 2 ln 2| = {d_err:.2e}, "
            f"|saturating g_loss - ln(1/2)| = {g_err:.2e} (need <= 1e-12)")


def _small_pipeline(tmp_path, tag):
    spec = CorpusSpec(n_real=60, n_fake=60, height=16, width=16, seed=11)
    dataset = split(generate_corpus(spec), DEFAULT_SPLIT, spec.seed)
    model = GanModel.build(dataset.height * dataset.width, seed=11)
    result = train(model, dataset, TrainConfig(iterations=50, batch_size=16,
                                               seed=11))
    path = tmp_path / f"{tag}.ckpt"
    save(Checkpoint(result.model, result.g_state, result.d_state,
                    result.rng_state, result.iteration,
                    dataset.height, dataset.width), path)
    report = evaluate_split(result.model, dataset, "test",
                            include_generated=True, seed=11)
    return path.read_bytes(), report.to_json(), path


def test_training_is_reproducible_and_checkpoint_roundtrips(tmp_path):
    first_bytes, first_report, first_path = _small_pipeline(tmp_path, "a")
    second_bytes, second_report, _ = _small_pipeline(tmp_path, "b")

    loaded = load(first_path)
    again = tmp_path / "again.ckpt"
    save(loaded, again)
    roundtrip_ok = again.read_bytes() == first_bytes

    ok = (first_bytes == second_bytes and first_report == second_report
          and roundtrip_ok)
    _record(6, ok,
            f"checkpoints identical={first_bytes == second_bytes} "
            f"reports identical={first_report == second_report} "
            f"roundtrip byte-identical={roundtrip_ok}")


def test_toy_generator_mean_approaches_real_mean():
    n = 256
    rng = Rng(derive_seed(97, "toy-real"))
    target = (0.35, -0.42)
    vals = []
    for _ in range(n):
        vals.append(max(-1.0, min(1.0, target[0] + 0.05 * rng.normal())))
        vals.append(max(-1.0, min(1.0, target[1] + 0.05 * rng.normal())))
    dataset = Dataset(Tensor((n, 1, 2), vals), [1] * n, ["n/a"] * n,
                      ["train"] * n)
    real_mean = [sum(vals[0::2]) / n, sum(vals[1::2]) / n]

    def distance(model):
        z = sample_latent(512, model.latent_dim,
                          Rng(derive_seed(97, "toy-eval")))
        out, _ = forward(model.generator, z)
        gx = sum(out.data[0::2]) / 512
        gy = sum(out.data[1::2]) / 512
        return math.hypot(gx - real_mean[0], gy - real_mean[1])

    model = GanModel.build(2)
    before = distance(model)
    result = train(model, dataset, TrainConfig(iterations=2000))
    after = distance(result.model)
    ok = after <= 0.5 * before
    _record(7, ok,
            f"|mean(G(z)) - mean(real)| {before:.4f} -> {after:.4f} "
            f"({after / before:.1%}, need <= 50%) by iteration 2000")


def test_untrained_discriminator_is_uninformative(default_corpus):
    dataset, _ = default_corpus
    model = GanModel.build(dataset.height * dataset.width)
    report = evaluate_split(model, dataset, "test")
    ok = 0.35 <= report.auc <= 0.65
    _record(8, ok,
            f"untrained auc={report.auc:.4f} (need within [0.35, 0.65])")
