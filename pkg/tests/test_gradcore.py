"""Tests for the network, AdamW, gradient verification and checkpoints."""

from __future__ import annotations

import struct
from collections import OrderedDict

import pytest
import torch

from disentlab.config import LossWeights
from disentlab.errors import CheckpointFormatError, NonFiniteGradientError
from disentlab.gradcore import (
    AdamHyper,
    AdamState,
    Architecture,
    LatentPair,
    ModelParams,
    adam_step,
    classify_med,
    classify_sensit,
    compute_grads,
    decode,
    decode_checkpoint,
    dr_probabilities,
    encode,
    encode_checkpoint,
    grad_check,
    read_checkpoint,
    write_checkpoint,
)
from disentlab.losses import (
    baseline_objective,
    classification_loss,
    default_specs,
    disentangled_objective,
    disentanglement_loss,
    realism_loss,
    sa_leakage_loss,
)

SMALL = Architecture(mode="disentangled", channels=3, image_size=16, latent_dim=4)
SMALL_BASELINE = Architecture(mode="baseline", channels=3, image_size=16, latent_dim=4)


def _images(n: int = 3, dtype: torch.dtype = torch.float64) -> torch.Tensor:
    g = torch.Generator().manual_seed(0)
    return torch.rand((n, 3, 16, 16), generator=g, dtype=dtype)


def _params(arch: Architecture = SMALL, seed: int = 0) -> ModelParams:
    return ModelParams.initialize(arch, seed, dtype=torch.float64)


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------


class TestArchitecture:
    def test_bottleneck(self) -> None:
        assert Architecture(image_size=32).bottleneck == 64 * 16

    def test_image_size_must_divide(self) -> None:
        with pytest.raises(ValueError, match="multiple of 8"):
            Architecture(image_size=12)


class TestModelParams:
    def test_same_seed_same_tensors(self) -> None:
        assert _params(seed=4).equal(_params(seed=4))
        assert not _params(seed=4).equal(_params(seed=5))

    def test_enumeration_order(self) -> None:
        names = _params().names()
        assert names[:2] == ["encoder.conv1.weight", "encoder.conv1.bias"]
        assert names[-2:] == ["c_sensit.weight", "c_sensit.bias"]
        assert names == ModelParams.names_for(SMALL)

    def test_baseline_has_encoder_and_head_only(self) -> None:
        names = _params(SMALL_BASELINE).names()
        assert {n.split(".")[0] for n in names} == {"encoder", "c_med"}
        assert _params(SMALL_BASELINE)["c_med.weight"].shape == (2, 8)

    def test_init_bounds_and_zero_bias(self) -> None:
        params = _params()
        bound = 1.0 / (SMALL.bottleneck**0.5)
        assert params["encoder.fc.weight"].abs().max() <= bound
        assert torch.count_nonzero(params["encoder.fc.bias"]) == 0

    def test_clone_is_independent(self) -> None:
        params = _params()
        copy = params.clone()
        copy["c_med.bias"].add_(1.0)
        assert not params.equal(copy)


class TestForward:
    def test_latent_shapes(self) -> None:
        latents = encode(_params(), _images())
        assert latents.z_med.shape == (3, 4)
        assert latents.z_sensit.shape == (3, 4)
        assert latents.joint().shape == (3, 8)

    def test_decode_in_unit_range(self) -> None:
        params = _params()
        out = decode(params, encode(params, _images()))
        assert out.shape == (3, 3, 16, 16)
        assert float(out.min()) >= 0.0 and float(out.max()) <= 1.0

    def test_probabilities_sum_to_one(self) -> None:
        for arch in (SMALL, SMALL_BASELINE):
            probs = dr_probabilities(_params(arch), _images())
            assert torch.allclose(probs.sum(dim=1), torch.ones(3, dtype=torch.float64))

    def test_disentangled_prediction_ignores_z_sensit(self) -> None:
        params = _params()
        latents = encode(params, _images())
        a = classify_med(params, latents.z_med)
        shuffled = LatentPair(latents.z_med, latents.z_sensit.flip(0))
        assert torch.equal(a, classify_med(params, shuffled.z_med))

    def test_wrong_image_shape(self) -> None:
        with pytest.raises(ValueError, match=r"\[B, 3, 16, 16\]"):
            encode(_params(), torch.zeros((2, 3, 32, 32), dtype=torch.float64))

    def test_wrong_latent_width(self) -> None:
        with pytest.raises(ValueError, match="z_med"):
            classify_med(_params(), torch.zeros((2, 5), dtype=torch.float64))

    def test_baseline_has_no_decoder(self) -> None:
        params = _params(SMALL_BASELINE)
        latents = encode(params, _images())
        with pytest.raises(ValueError, match="no 'decoder'"):
            decode(params, latents)


# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------


def _toy(value: float) -> ModelParams:
    return ModelParams(SMALL, OrderedDict(w=torch.tensor([value], dtype=torch.float64)))


class TestAdam:
    def test_first_step_matches_hand_computation(self) -> None:
        hyper = AdamHyper(lr=0.1, weight_decay=0.01)
        params = _toy(2.0)
        state = AdamState.zeros_like(params, hyper)
        grads = {"w": torch.tensor([0.5], dtype=torch.float64)}
        new_state, new_params = adam_step(state, params, grads)
        # m_hat = g and v_hat = g^2 after one step.
        expected = 2.0 - 0.1 * 0.01 * 2.0 - 0.1 * 0.5 / (0.5 + 1e-8)
        assert float(new_params["w"]) == pytest.approx(expected, rel=1e-12)
        assert new_state.step == 1
        assert float(params["w"]) == 2.0

    def test_second_step_uses_moments(self) -> None:
        hyper = AdamHyper(lr=0.01, weight_decay=0.0)
        params = _toy(1.0)
        state = AdamState.zeros_like(params, hyper)
        g1, g2 = 1.0, -0.5
        state, params = adam_step(state, params, {"w": torch.tensor([g1]).double()})
        state, params = adam_step(state, params, {"w": torch.tensor([g2]).double()})
        m = 0.9 * (0.1 * g1) + 0.1 * g2
        v = 0.999 * (0.001 * g1**2) + 0.001 * g2**2
        m_hat, v_hat = m / (1 - 0.9**2), v / (1 - 0.999**2)
        expected = 1.0 - 0.01 * 1.0 / (1.0 + 1e-8) - 0.01 * m_hat / (v_hat**0.5 + 1e-8)
        assert float(params["w"]) == pytest.approx(expected, rel=1e-10)

    def test_non_finite_gradient_names_tensor(self) -> None:
        params = _toy(1.0)
        state = AdamState.zeros_like(params, AdamHyper())
        with pytest.raises(NonFiniteGradientError, match="'w'") as info:
            adam_step(state, params, {"w": torch.tensor([float("nan")]).double()})
        assert info.value.parameter == "w"

    def test_missing_gradient(self) -> None:
        params = _toy(1.0)
        with pytest.raises(KeyError, match="w"):
            adam_step(AdamState.zeros_like(params, AdamHyper()), params, {})

    def test_descends_a_quadratic(self) -> None:
        params = _toy(3.0)
        state = AdamState.zeros_like(params, AdamHyper(lr=0.1, weight_decay=0.0))
        for _ in range(500):
            _, grads = compute_grads(lambda p: (p["w"] ** 2).sum(), params)
            state, params = adam_step(state, params, grads)
        assert abs(float(params["w"])) < 0.1


# ---------------------------------------------------------------------------
# Gradient verification
# ---------------------------------------------------------------------------


def _labels() -> tuple[torch.Tensor, torch.Tensor]:
    return torch.tensor([0, 1, 1]), torch.tensor([1, 0, -1])


class TestGradCheck:
    def test_quadratic_is_exact(self) -> None:
        params = _params()
        worst = grad_check(
            lambda p: sum((t**2).sum() for _, t in p), params, probe_count=50, step=1e-3
        )
        assert worst < 1e-5

    def test_detects_a_wrong_gradient(self) -> None:
        params = _params()
        loss = lambda p: sum((t**2).sum() for _, t in p)  # noqa: E731

        def doubled(p: ModelParams) -> OrderedDict[str, torch.Tensor]:
            _, grads = compute_grads(loss, p)
            return OrderedDict((k, 2 * g) for k, g in grads.items())

        assert grad_check(loss, params, probe_count=50, grad_fn=doubled) > 0.1

    def test_unused_parameters_get_zero_gradient(self) -> None:
        params = _params()
        _, grads = compute_grads(lambda p: p["c_med.bias"].sum(), params)
        assert torch.count_nonzero(grads["encoder.fc.weight"]) == 0
        assert torch.equal(grads["c_med.bias"], torch.ones(2, dtype=torch.float64))

    def test_focal_baseline(self) -> None:
        y, _ = _labels()
        loss = lambda p: baseline_objective(  # noqa: E731
            p, _images(), y, LossWeights(), (0.7, 1.8)
        )
        assert grad_check(loss, _params(SMALL_BASELINE), probe_count=200) < 1e-3

    def test_classification_loss(self) -> None:
        y_med, y_sensit = _labels()

        def loss(p: ModelParams) -> torch.Tensor:
            z = encode(p, _images())
            return classification_loss(
                classify_med(p, z.z_med),
                y_med,
                classify_sensit(p, z.z_sensit),
                y_sensit,
                LossWeights(lambda_sensit=0.5),
            )

        assert grad_check(loss, _params(), probe_count=200) < 1e-3

    def test_realism_loss(self) -> None:
        images = _images()
        loss = lambda p: realism_loss(  # noqa: E731
            images, decode(p, encode(p, images)), LossWeights()
        )
        assert grad_check(loss, _params(), probe_count=200) < 1e-3

    def test_disentanglement_loss(self) -> None:
        specs = default_specs(0.3)
        loss = lambda p: disentanglement_loss(p, _images(), specs, 5)  # noqa: E731
        assert grad_check(loss, _params(), probe_count=200) < 1e-3

    def test_leakage_loss(self) -> None:
        y_med, y_sensit = torch.tensor([0, 0, 1, 1]), torch.tensor([0, 1, 1, 0])
        images = _images(n=4)
        loss = lambda p: sa_leakage_loss(  # noqa: E731
            encode(p, images).z_med, y_sensit, y_med
        )
        assert grad_check(loss, _params(), probe_count=200) < 1e-3

    def test_total_objective(self) -> None:
        y_med, y_sensit = _labels()

        def loss(p: ModelParams) -> torch.Tensor:
            total, _ = disentangled_objective(
                p, _images(), y_med, y_sensit, LossWeights(), (0.7, 1.8), 0.3, 5
            )
            return total

        assert grad_check(loss, _params(), probe_count=200) < 1e-3

    def test_non_scalar_loss(self) -> None:
        with pytest.raises(ValueError, match="scalar"):
            compute_grads(lambda p: p["c_med.bias"], _params())


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


class TestCheckpoint:
    def test_round_trip(self, tmp_path) -> None:
        params = ModelParams.initialize(SMALL, 1)
        write_checkpoint(tmp_path / "m.ckpt", {"note": "x"}, params.tensors)
        header, tensors = read_checkpoint(tmp_path / "m.ckpt")
        assert header == {"note": "x"}
        assert list(tensors) == params.names()
        assert all(torch.equal(tensors[k], t) for k, t in params)

    def test_scalar_tensor(self) -> None:
        _, tensors = decode_checkpoint(encode_checkpoint({}, {"s": torch.tensor(2.5)}))
        assert float(tensors["s"]) == 2.5

    def test_bad_magic(self) -> None:
        data = encode_checkpoint({}, {"a": torch.zeros(2)})
        with pytest.raises(CheckpointFormatError, match="magic"):
            decode_checkpoint(b"NOTACKPT" + data[8:])

    def test_truncated(self) -> None:
        data = encode_checkpoint({}, {"a": torch.zeros(4)})
        with pytest.raises(CheckpointFormatError, match="values of 'a'"):
            decode_checkpoint(data[:-3])

    def test_trailing_bytes(self) -> None:
        data = encode_checkpoint({}, {"a": torch.zeros(1)})
        with pytest.raises(CheckpointFormatError, match="trailing"):
            decode_checkpoint(data + b"\0")

    def test_duplicate_name(self) -> None:
        data = encode_checkpoint({}, {"a": torch.zeros(1)})
        prefix_len = 8 + 4 + len(b"{}")
        chunk = data[prefix_len + 4 :]
        forged = data[:prefix_len] + struct.pack("<I", 2) + chunk + chunk
        with pytest.raises(CheckpointFormatError, match="twice"):
            decode_checkpoint(forged)

    def test_invalid_json_header(self) -> None:
        forged = b"DISENCK1" + struct.pack("<I", 3) + b"{x}" + struct.pack("<I", 0)
        with pytest.raises(CheckpointFormatError, match="JSON"):
            decode_checkpoint(forged)

    def test_missing_file(self, tmp_path) -> None:
        with pytest.raises(FileNotFoundError):
            read_checkpoint(tmp_path / "none.ckpt")
