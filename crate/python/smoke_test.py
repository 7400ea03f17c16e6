"""Smoke test for the paramodular_py extension.

Build and install first:
    pip install --no-build-isolation crates/python
"""

from fractions import Fraction

import paramodular_py as pm


def check_theta_blocks():
    blocks = pm.theta_search(2, 37, cusp=True)
    assert [str(b) for b in blocks] == ["eta^-6 th1 th1 th1 th2 th2 th2 th3 th3 th4 th5"]
    b = pm.ThetaBlock.parse(str(blocks[0]))
    assert b == blocks[0] and b.weight == 2 and b.index == 37
    phi = b.jacobi_form(4)
    # leading term q^1 zeta^0 of the normalised block
    assert phi.coeff(1, 0) != 0
    assert pm.JacobiForm.loads(phi.dumps()).coeff(3, 5) == phi.coeff(3, 5)


def check_lift_and_certify():
    (phi,) = pm.jacobi_basis(2, 37)
    lift = phi.lift(depth=2, n_max=3)
    assert lift.level == 37 and len(lift) > 0
    assert lift.fricke_sign() == 1
    assert not pm.is_nonlift(lift, [lift])
    assert not pm.is_nonlift(lift, [lift], prime=12347)
    back = pm.ParamodularForm.loads(lift.dumps("n<=3 m<=2"))
    assert back.coeff(1, 1, 1) == lift.coeff(1, 1, 1)
    assert isinstance(lift.coeff(1, 1, 1), Fraction)
    assert isinstance(lift.reduce(101).coeff(1, 1, 1), int)


def check_restriction():
    dim, forms = pm.restrict(37, 1, Fraction(40), "+37")
    assert dim == 1 and len(forms) == 1
    dim, _ = pm.restrict(37, 1, 40, "-37")
    assert dim == 0
    dim, forms = pm.restrict(37, 1, 40, "+37", prime=12347)
    assert dim == 1 and forms[0].prime == 12347


def check_borcherds():
    phi = pm.ThetaBlock.parse("eta^-6 th1 th1 th2 th2 th2 th3 th4 th11 th13 th15")
    big = pm.ThetaBlock.parse(
        "eta^-18 th1 th1 th2 th2 th2 th3 th3 th4 th4 th5 th5 th6 th6 th7 th7 "
        "th8 th8 th9 th10 th11 th13 th15"
    )
    psi = pm.inflate_psi(phi, big, 69, beta=-1)
    report = psi.validate()
    assert report["passes"], report["violations"]
    assert report["weight"] == 2
    assert all(v >= 0 for v in psi.humbert_multiplicities().values())
    f = psi.borcherds(2, 3)
    assert f.weight == 2 and f.fricke_sign == 1
    assert len(f.slices) == 2


def main():
    check_theta_blocks()
    check_lift_and_certify()
    check_restriction()
    check_borcherds()
    print("smoke test ok")


if __name__ == "__main__":
    main()
