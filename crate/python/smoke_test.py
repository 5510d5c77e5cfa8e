"""Smoke test for the qmlab Python bindings.

Build and install first:  pip install --no-build-isolation ./crates/py
"""

import math

import qmlab


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    plus = [1 / math.sqrt(2), 1 / math.sqrt(2)]

    cnot = qmlab.Scheme.cnot()
    assert (cnot.dim_s, cnot.dim_a) == (2, 2)
    povm = cnot.measured_povm()
    assert close(povm[0][0][0].real, 1.0) and close(abs(povm[0][1][1]), 0.0)
    assert all(close(w, 0.5) for w in cnot.weights(plus))
    assert cnot.first_kind([plus]) == "holds"
    assert cnot.repeatable([plus]) == "holds"
    oc = cnot.observable_correlation(plus)
    assert close(oc["rho"], 1.0) and oc["dependence"] == "complete"
    assert close(cnot.value_correlation(plus, 0), 1.0)

    crot = qmlab.Scheme.controlled_rotation()
    assert crot.repeatable([plus]) == "fails"
    assert close(crot.observable_correlation(plus)["rho"], 1 / 3)
    assert close(crot.state_correlation(plus, 1), 1 / math.sqrt(3))

    # the same CNOT from an explicit unitary and a mixed input
    u = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]
    explicit = qmlab.Scheme.from_unitary(2, u, [1, 0])
    mixed = [[0.5, 0], [0, 0.5]]
    assert close(explicit.observable_correlation(mixed)["rho"], 1.0)

    try:
        qmlab.Scheme.from_unitary(2, u, [1, 0, 0])
    except ValueError:
        pass
    else:
        raise AssertionError("dimension mismatch accepted")

    quad = qmlab.Quadrature(32, 2.0)
    assert close(quad.observable_correlation(1.0), 0.8, 1e-3)
    rows = quad.sweep(1.0, [0.5, 1.0])
    assert [round(r["rho_obs"], 3) for r in rows] == [0.2, 0.5]

    summary = qmlab.verify(seed=1, count=5)
    assert summary and all(failed == 0 for _, failed, _ in summary.values()), summary

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
