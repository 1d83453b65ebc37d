"""Trainer acceptance: the shipped training-side criteria.

Each test prints a PASS/FAIL line with the measured values (run with -s).
"""

import json

import numpy as np
import pytest
import torch

from beamtrainer.data import TrainConfig, generate_dataset
from beamtrainer.export import export_weights
from beamtrainer.model import unfold_loss, unfold_objectives
from beamtrainer.train import _to_tensors, smoothed, train


def report(name: str, passed: bool, detail: str) -> None:
    print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    assert passed, f"{name}: {detail}"


@pytest.fixture(scope="module")
def training_run():
    cfg = TrainConfig(num_antennas=16, unfold_steps=15, dataset_size=1000,
                      batch_size=100, epochs=50, seed=0)
    return cfg, train(cfg, dtype=torch.float64)


def test_loss_curve_halves(training_run):
    cfg, res = training_run
    sm = smoothed(res.loss_curve, 5)
    ratio = sm[-1] / sm[0]
    report("training loss halving", ratio < 0.5,
           f"50 epochs on 1000 samples: smoothed loss {sm[0]:.1f} -> {sm[-1]:.1f} "
           f"(ratio {ratio:.3f}, need <0.5)")


def test_trained_steps_beat_start(training_run):
    cfg, res = training_run
    val_cfg = TrainConfig(**{**cfg.__dict__, "seed": 123, "dataset_size": 40})
    a, u, w_start, inputs = _to_tensors(generate_dataset(val_cfg), torch.float64)
    with torch.no_grad():
        steps = res.net(inputs)
        final = float(unfold_objectives(a, u, w_start, steps)[:, -1].mean())
        frozen = float(unfold_objectives(a, u, w_start, torch.zeros_like(steps))[:, -1].mean())
    report("trained steps beat the start point", final < frozen,
           f"validation objective {final:.1f} vs {frozen:.1f} at zero steps")


def test_gradient_check_against_finite_differences():
    # tiny instance: N_r=4, T=2; largest-gradient entries, 1e-4 relative
    from beamtrainer.model import StepSizeNet

    cfg = TrainConfig(num_antennas=4, unfold_steps=2, dataset_size=2, batch_size=2,
                      epochs=1, seed=3)
    a, u, w_start, inputs = _to_tensors(generate_dataset(cfg), torch.float64)
    net = StepSizeNet(cfg.layer_dims, seed=1, dtype=torch.float64,
                      input_rms=float(torch.sqrt((inputs.abs() ** 2).mean())),
                      output_scale=1e-2)
    loss = unfold_loss(a, u, w_start, net(inputs))
    loss.backward()
    worst = 0.0
    for layer in net.layers:
        for param in (layer.w_real, layer.w_imag, layer.b_real, layer.b_imag):
            grad = param.grad.reshape(-1)
            flat = param.detach().reshape(-1)
            idx = int(torch.argmax(grad.abs()))
            an = grad[idx].item()
            h = max(1e-6, 1e-4 * abs(flat[idx].item()))
            with torch.no_grad():
                orig = flat[idx].item()
                flat[idx] = orig + h
                up = float(unfold_loss(a, u, w_start, net(inputs)))
                flat[idx] = orig - h
                down = float(unfold_loss(a, u, w_start, net(inputs)))
                flat[idx] = orig
            fd = (up - down) / (2 * h)
            worst = max(worst, abs(fd - an) / max(abs(fd), abs(an)))
    report("analytic gradient vs finite differences", worst < 1e-4,
           f"worst relative deviation {worst:.2e} over all layers (need <1e-4)")


def test_export_round_trip_through_runtime(training_run, tmp_path):
    beamsynth_unfold = pytest.importorskip("beamsynth.unfold")
    cfg, res = training_run
    path = tmp_path / "weights.json"
    export_weights(res.net, cfg, res.samples[0], path)
    loaded = beamsynth_unfold.load_weights(path)
    s = res.samples[0]
    inp = beamsynth_unfold.UnfoldInput(s.ls_solution, s.egrad0, s.rgrad0)
    got = beamsynth_unfold.predict_step_sizes(inp, loaded)
    ref = np.asarray(json.loads(path.read_text())["reference_output"])
    dev = np.linalg.norm(got - ref) / max(np.linalg.norm(ref), 1e-300)
    report("weights file round trip through the runtime", dev <= 1e-5,
           f"runtime forward vs recorded reference: relative deviation {dev:.2e} "
           f"(need <=1e-5)")
