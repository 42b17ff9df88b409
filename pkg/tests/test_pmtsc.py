import numpy as np
import pytest

from pmtc.metrics import cer
from pmtc.pmtsc import pmtsc, spectral_cluster_rows
from pmtc.simulate import SimDesign, gen_pmtc


def test_noiseless_exact_recovery_all_modes():
    d = SimDesign(dims=(30, 24), T=12, ranks=(3, 2), m1=2, mu_b=(1.0,),
                  sigma_x=0.0, sigma_y=0.0, seed=0)
    data, truth = gen_pmtc(d)
    init = pmtsc(data.x, data.y, d.ranks, seed=0)
    for i in range(2):
        assert cer(init.memberships[i], truth.memberships[i])[0] == 0.0
        assert init.kmeans_objectives[i] < 1e-12


def test_single_cluster_modes_trivial():
    d = SimDesign(dims=(20, 15), T=10, ranks=(1, 1), m1=1, mu_b=(1.0,), seed=1)
    data, truth = gen_pmtc(d)
    init = pmtsc(data.x, data.y, d.ranks, seed=1)
    for m in init.memberships:
        assert m.num_clusters == 1
        assert np.all(m.labels == 0)


def test_projected_matrix_shapes():
    d = SimDesign(dims=(18, 14), T=9, ranks=(3, 2), m1=2, mu_b=(1.0,), seed=2)
    data, truth = gen_pmtc(d)
    init = pmtsc(data.x, data.y, d.ranks, seed=2)
    # mode-1 features concatenate the projected tensor block with the panel
    assert init.projected[0].shape == (18, 2 * 9 + 9)
    assert init.projected[1].shape == (14, 3 * 9)


def test_deterministic_given_seed():
    d = SimDesign(dims=(24, 20), T=10, ranks=(3, 2), m1=2, mu_b=(1.0,),
                  gamma_x=0.2, gamma_y=0.2, seed=3)
    data, _ = gen_pmtc(d)
    a = pmtsc(data.x, data.y, d.ranks, seed=9)
    b = pmtsc(data.x, data.y, d.ranks, seed=9)
    for ma, mb in zip(a.memberships, b.memberships):
        assert np.array_equal(ma.labels, mb.labels)


def test_relabeling_invariance_of_quality():
    # output quality is judged through permutation-aligned error only:
    # feeding relabeled truth changes nothing measurable
    d = SimDesign(dims=(24, 20), T=10, ranks=(3, 2), m1=2, mu_b=(1.0,),
                  gamma_x=0.3, gamma_y=0.3, seed=4)
    data, truth = gen_pmtc(d)
    init = pmtsc(data.x, data.y, d.ranks, seed=4)
    base = cer(init.memberships[0], truth.memberships[0])[0]
    rng = np.random.default_rng(5)
    for _ in range(3):
        perm = rng.permutation(3)
        assert cer(init.memberships[0], truth.memberships[0].permute(perm))[0] == base


def test_hsc_without_panel():
    d = SimDesign(dims=(30, 24), T=12, ranks=(3, 2), m1=2, mu_b=(1.0,),
                  sigma_x=0.0, sigma_y=0.0, seed=6)
    data, truth = gen_pmtc(d)
    init = pmtsc(data.x, None, d.ranks, seed=6)
    for i in range(2):
        assert cer(init.memberships[i], truth.memberships[i])[0] == 0.0


def test_bases_length_validation():
    d = SimDesign(dims=(12, 10), T=6, ranks=(2, 2), m1=2, mu_b=(1.0,), seed=7)
    data, _ = gen_pmtc(d)
    with pytest.raises(ValueError):
        pmtsc(data.x, data.y, d.ranks, bases=[np.eye(12)[:, :2]], seed=7)


def test_spectral_cluster_rows_matches_zero_coupling():
    d = SimDesign(dims=(40, 30), T=20, ranks=(3, 2), m1=2, mu_b=(1.0,),
                  gamma_x=-0.5, gamma_y=0.3, seed=8)
    data, _ = gen_pmtc(d)
    ysc = spectral_cluster_rows(data.y, 3, seed=42)
    coupled = pmtsc(data.x, data.y, d.ranks, seed=42, omega=0.0)
    assert np.array_equal(ysc.labels, coupled.memberships[0].labels)
