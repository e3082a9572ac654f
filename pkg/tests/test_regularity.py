import numpy as np
import pytest

from gecert.circuit import Resistor, Signal, Zener, compose_series
from gecert.errors import EmptyInput, OnFold, RatioViolation
from gecert.regularity import (
    AuxiliaryMap,
    SmrCertificate,
    auxiliary_shift_check,
    continuity_check,
    reduce_radii,
    smr_pointwise,
    uniform_certificate,
    verify_localization,
)

from oracles import diac_fold_b


def test_refuses_fold_and_segment_points(diac_eq):
    zb, _ = diac_fold_b(220.0, 0.1)
    with pytest.raises(OnFold):
        smr_pointwise(diac_eq, 0.0, zb)
    with pytest.raises(OnFold):
        smr_pointwise(diac_eq, 0.0, 0.0)
    with pytest.raises(OnFold):
        smr_pointwise(diac_eq, 0.0, 1e-4)


def test_pointwise_certificates_satisfy_the_ratio_law(diac_certs):
    for c in diac_certs:
        assert c.kappa_t * c.b_t <= c.a_t * (1 + 1e-12)


def test_pointwise_certificates_verify(diac_eq, diac_certs):
    for c in diac_certs[::64]:
        rep = verify_localization(diac_eq, c)
        assert rep.passed, (c, rep)


def test_zener_modulus_is_inverse_resistance():
    eq = compose_series([Resistor(1000.0), Zener(5.1, 0.7)], Signal(12.0))
    c = smr_pointwise(eq, 0.0, 0.0113)
    assert c.kappa_t == pytest.approx(1.05 / 1000.0)
    assert c.a_t == pytest.approx(0.95 * 0.0113)


def test_uniform_dominates_pointwise(diac_eq, diac_certs, diac_ucert):
    u = diac_ucert
    assert all(u.kappa >= c.kappa_t and u.a <= c.a_t and u.b <= c.b_t for c in diac_certs)
    assert u.b == min(u.a / u.kappa, u.min_b_t)
    for c in diac_certs[::128]:
        assert verify_localization(diac_eq, u.at(c.t, c.z)).passed


def test_auxiliary_map_inverse(diac_eq):
    G = AuxiliaryMap(diac_eq, 0.25)
    z = G.inverse(0.0).points
    assert len(z) == 3
    for v in z:
        assert G(v).contains(0.0, tol=1e-9)


def test_reduce_radii():
    c = SmrCertificate(0.0, 1.0, 1.0, 2.0, 0.5)
    r = reduce_radii(c, 0.5, 1.0)
    assert (r.a_t, r.b_t, r.kappa_t) == (0.5, 1.0, 0.5)
    with pytest.raises(RatioViolation):
        reduce_radii(c, 0.1, 1.0)
    with pytest.raises(ValueError):
        reduce_radii(c, 2.0, 1.0)


def test_empty_uniform():
    with pytest.raises(EmptyInput):
        uniform_certificate([])


def test_oversized_ball_fails_localization(diac_eq):
    # a ball reaching past fold B sees two preimages
    bad = SmrCertificate(0.0, 0.0014486316223625416, 0.03, 5.0, 1e-3)
    rep = verify_localization(diac_eq, bad)
    assert not rep.passed and rep.failures > 0


def test_continuity_on_z2(diac_eq, diac_z2, diac_certs, diac_ucert):
    assert continuity_check(diac_z2, diac_eq.p, diac_certs) == 0.0
    assert continuity_check(diac_z2, diac_eq.p, diac_ucert) == 0.0
    assert continuity_check(diac_z2, diac_eq.p, 1e-9) > 0.0


def test_shift_identity(diac_eq):
    vs = np.linspace(-0.05, 0.05, 41)
    ws = np.linspace(-5, 5, 41)
    assert auxiliary_shift_check(diac_eq, 0.1, 0.37, vs, ws) <= 1e-10


def test_certificate_positivity():
    with pytest.raises(ValueError):
        SmrCertificate(0.0, 0.0, 0.0, 1.0, 1.0)
