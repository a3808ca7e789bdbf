"""Time one risk-plus-gradient evaluation: the package's numpy kernels against a
fused numba loop.

The numba variant walks the batch one sample at a time with preallocated
scratch buffers and calls scalar tanh.
Run it to check whether a compiled kernel would pay off on this machine:

    python3 benchmarks/bench_kernels.py --n 1333 --repeats 500
"""
import argparse
import time

import numpy as np

from sparse_net.net import backward, forward_trace

try:
    from numba import njit
except ImportError:  # numba is optional here
    njit = None


def numpy_risk_grad(layers, XT, Y):
    acts, out = forward_trace(layers, XT, "tanh")
    resid = out - Y[None, :]
    risk = float(np.einsum("ij,ij->", resid, resid)) / Y.size
    return risk, backward(layers, acts, resid, "tanh")


def _build_numba():
    @njit(cache=True)
    def fused(Ws, bs, X, Y, gWs, gbs):
        n = X.shape[0]
        n_layers = len(Ws)
        wmax = max(X.shape[1], max([W.shape[0] for W in Ws]))
        acts = np.empty((n_layers + 1, wmax))
        delta = np.empty(wmax)
        nxt = np.empty(wmax)
        for j in range(n_layers):
            gWs[j][:] = 0.0
            gbs[j][:] = 0.0
        risk = 0.0
        for i in range(n):
            acts[0, :X.shape[1]] = X[i]
            for j in range(n_layers):
                W, b = Ws[j], bs[j]
                for r in range(W.shape[0]):
                    s = b[r]
                    for c in range(W.shape[1]):
                        s += W[r, c] * acts[j, c]
                    acts[j + 1, r] = np.tanh(s) if j < n_layers - 1 else s
            res = acts[n_layers, 0] - Y[i]
            risk += res * res
            delta[0] = 2.0 * res / n
            for j in range(n_layers - 1, -1, -1):
                W = Ws[j]
                for r in range(W.shape[0]):
                    gbs[j][r] += delta[r]
                    for c in range(W.shape[1]):
                        gWs[j][r, c] += delta[r] * acts[j, c]
                if j > 0:
                    for c in range(W.shape[1]):
                        s = 0.0
                        for r in range(W.shape[0]):
                            s += W[r, c] * delta[r]
                        nxt[c] = s * (1.0 - acts[j, c] * acts[j, c])
                    delta[:W.shape[1]] = nxt[:W.shape[1]]
        return risk / n

    return fused


def timed(fn, repeats):
    fn()
    t = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t) / repeats * 1e6


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1333, help="batch size (default: 1333, a 2/3 split of 2000)")
    ap.add_argument("--widths", default="20,10,10,10,1", help="layer widths (default: 20,10,10,10,1)")
    ap.add_argument("--repeats", type=int, default=300, help="timed calls per kernel (default: 300)")
    args = ap.parse_args()

    widths = [int(w) for w in args.widths.split(",")]
    rng = np.random.default_rng(0)
    layers = [(rng.normal(size=(widths[j], widths[j - 1])) * 0.3, rng.normal(size=widths[j]) * 0.1)
              for j in range(1, len(widths))]
    X = rng.uniform(-1, 1, (args.n, widths[0]))
    Y = rng.normal(size=args.n)
    XT = np.ascontiguousarray(X.T)

    risk_np, grads_np = numpy_risk_grad(layers, XT, Y)
    t_np = timed(lambda: numpy_risk_grad(layers, XT, Y), args.repeats)
    print(f"numpy  {t_np:9.1f} us per risk+gradient  (n={args.n}, widths={widths})")

    if njit is None:
        print("numba  not installed, skipped")
        return
    fused = _build_numba()
    Ws, bs = tuple(W for W, _ in layers), tuple(b for _, b in layers)
    gWs, gbs = tuple(np.zeros_like(W) for W in Ws), tuple(np.zeros_like(b) for b in bs)
    risk_nb = fused(Ws, bs, X, Y, gWs, gbs)
    err = max(float(np.max(np.abs(g - gW))) for (g, _), gW in zip(grads_np, gWs))
    t_nb = timed(lambda: fused(Ws, bs, X, Y, gWs, gbs), args.repeats)
    print(f"numba  {t_nb:9.1f} us per risk+gradient  (risk diff {abs(risk_np - risk_nb):.1e}, "
          f"max gradient diff {err:.1e})")
    print(f"numpy is {t_nb / t_np:.2f}x faster" if t_np < t_nb else f"numba is {t_np / t_nb:.2f}x faster")


if __name__ == "__main__":
    main()
