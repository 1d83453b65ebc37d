import numpy as np
import torch

from beamtrainer.data import TrainConfig, generate_dataset, pad_and_stack
from beamtrainer.model import StepSizeNet, unfold_loss, unfold_objectives, unit_project
from beamtrainer.train import _to_tensors


def tiny_setup(t=2):
    cfg = TrainConfig(num_antennas=4, unfold_steps=t, dataset_size=2, batch_size=2,
                      epochs=1, seed=3)
    samples = generate_dataset(cfg)
    a, u, w0, inputs = _to_tensors(samples, torch.float64)
    net = StepSizeNet(cfg.layer_dims, seed=1, dtype=torch.float64,
                      input_rms=float(torch.sqrt((inputs.abs() ** 2).mean())),
                      output_scale=1e-2)
    return cfg, net, a, u, w0, inputs


class TestGradients:
    def test_loss_gradient_matches_finite_differences(self):
        # single-weight central differences vs autograd on N_r=4, T=2;
        # checked at the largest-gradient entries, where the relative
        # comparison is meaningful against float64 FD noise
        cfg, net, a, u, w0, inputs = tiny_setup(t=2)
        loss = unfold_loss(a, u, w0, net(inputs))
        loss.backward()
        checked = 0
        for layer in (net.layers[0], net.layers[-1]):
            for param in (layer.w_real, layer.w_imag, layer.b_real):
                grad = param.grad.reshape(-1)
                flat = param.detach().reshape(-1)
                order = torch.argsort(grad.abs(), descending=True)
                for idx in order[:2].tolist():
                    an = grad[idx].item()
                    h = max(1e-6, 1e-4 * abs(flat[idx].item()))
                    with torch.no_grad():
                        orig = flat[idx].item()
                        flat[idx] = orig + h
                        up = float(unfold_loss(a, u, w0, net(inputs)))
                        flat[idx] = orig - h
                        down = float(unfold_loss(a, u, w0, net(inputs)))
                        flat[idx] = orig
                    fd = (up - down) / (2 * h)
                    scale = max(abs(fd), abs(an))
                    assert abs(fd - an) / scale < 1e-4
                    checked += 1
        assert checked >= 12

    def test_gradients_flow_through_retraction(self):
        # a step tensor that requires grad must receive a nonzero gradient
        cfg, net, a, u, w0, inputs = tiny_setup(t=3)
        steps = torch.full((a.shape[0], 3), 1e-2, dtype=torch.float64, requires_grad=True)
        loss = unfold_objectives(a, u, w0, steps).mean()
        loss.backward()
        assert torch.isfinite(steps.grad).all()
        assert float(steps.grad.abs().max()) > 0

    def test_unit_project_guard_at_zero(self):
        z = torch.zeros(3, dtype=torch.complex128, requires_grad=True)
        out = unit_project(z)
        assert torch.isfinite(out).all()
        out.abs().sum().backward()
        assert torch.isfinite(z.grad).all()

    def test_objectives_match_numpy_reference(self):
        # the torch trajectory must agree with a plain numpy replay
        cfg, net, a, u, w0, inputs = tiny_setup(t=3)
        steps = np.array([[1e-2, 2e-2, 5e-3], [2e-2, 1e-2, 1e-2]])
        objs = unfold_objectives(a, u, w0, torch.from_numpy(steps)).detach().numpy()
        for b in range(2):
            aa, uu, w = a[b].numpy(), u[b].numpy(), w0[b].numpy()
            for t in range(3):
                egrad = aa @ (aa.conj().T @ w) - aa @ uu.conj()
                rgrad = egrad - np.real(egrad * w.conj()) * w
                z = w - steps[b, t] * rgrad
                w = z / np.maximum(np.abs(z), 1e-12)
                f = np.linalg.norm(uu - w.conj() @ aa) ** 2
                assert np.isclose(objs[b, t], f, rtol=1e-10)
