import io

import numpy as np
import pytest

from pagedcuckoo.graph import Config, draw_choices, dump_graph, generate, load_graph, page_of
from pagedcuckoo.rng import Rng


def test_config_derived_quantities():
    cfg = Config(c=0.95, m=1000, s=100, k_p=3, k_b=1)
    assert cfg.t == 10
    assert cfg.k == 4
    assert cfg.n == 950


def test_config_rounding_ties_up():
    assert Config(c=0.5, m=5, s=5, k_p=1, k_b=0).n == 3
    assert Config(c=0.25, m=10, s=10, k_p=1, k_b=0).n == 3  # 2.5 rounds up


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(c=0.9, m=1000, s=300, k_p=3, k_b=1),  # s does not divide m
        dict(c=0.9, m=100, s=100, k_p=3, k_b=1),  # backup needs t >= 2
        dict(c=0.9, m=100, s=10, k_p=0, k_b=1),  # k_p >= 1
        dict(c=0.9, m=100, s=10, k_p=11, k_b=0),  # k_p <= s
        dict(c=0.9, m=100, s=10, k_p=3, k_b=-1),
        dict(c=0.9, m=100, s=10, k_p=3, k_b=1, ell=0),
        dict(c=-0.1, m=100, s=10, k_p=3, k_b=1),
    ],
)
def test_config_invariants_rejected(kwargs):
    with pytest.raises(ValueError):
        Config(**kwargs)


def test_generated_structure():
    cfg = Config(c=0.95, m=1000, s=100, k_p=3, k_b=1)
    g = generate(cfg, Rng(0))
    assert g.n == 950
    for x in range(g.n):
        kc = g.key(x)
        cells = kc.cells
        assert len(set(cells)) == 4
        assert len(kc.primary_cells) == 3
        assert len(kc.backup_cells) == 1
        assert kc.backup_page is not None
        assert kc.backup_page != kc.primary_page
        for y in kc.primary_cells:
            assert page_of(y, cfg) == kc.primary_page
        for y in kc.backup_cells:
            assert page_of(y, cfg) == kc.backup_page


def test_generate_without_backup_stays_on_one_page():
    cfg = Config(c=0.9, m=400, s=20, k_p=4, k_b=0)
    g = generate(cfg, Rng(1))
    for x in range(g.n):
        kc = g.key(x)
        assert kc.backup_page is None
        assert kc.backup_cells == ()
        assert len({page_of(y, cfg) for y in kc.primary_cells}) == 1


def test_page_of_boundaries():
    cfg = Config(c=0.9, m=1000, s=100, k_p=3, k_b=1)
    assert page_of(0, cfg) == 0
    assert page_of(99, cfg) == 0
    assert page_of(100, cfg) == 1
    assert page_of(999, cfg) == 9
    with pytest.raises(ValueError):
        page_of(1000, cfg)
    with pytest.raises(ValueError):
        page_of(-1, cfg)


def test_primary_pages_uniform():
    cfg = Config(c=1.0, m=100_000, s=6250, k_p=3, k_b=1)
    g = generate(cfg, Rng(123))
    counts = np.bincount(g.pages[:, 0], minlength=cfg.t)
    expected = cfg.n / cfg.t
    sigma = np.sqrt(cfg.n * (1 / cfg.t) * (1 - 1 / cfg.t))
    assert np.all(np.abs(counts - expected) < 5 * sigma)


def test_backup_page_never_equals_primary():
    cfg = Config(c=1.0, m=100, s=50, k_p=2, k_b=1)  # only two pages
    g = generate(cfg, Rng(3))
    assert np.all(g.pages[:, 0] != g.pages[:, 1])
    assert set(np.unique(g.pages[:, 1])) <= {0, 1}


def test_generation_is_deterministic():
    cfg = Config(c=0.95, m=1000, s=100, k_p=3, k_b=1)
    g1 = generate(cfg, Rng(9))
    g2 = generate(cfg, Rng(9))
    assert np.array_equal(g1.cells, g2.cells)
    assert np.array_equal(g1.pages, g2.pages)


def test_draw_choices_matches_generate_stream():
    cfg = Config(c=0.95, m=1000, s=100, k_p=3, k_b=1)
    g = generate(cfg, Rng(21))
    rng = Rng(21)
    for x in range(5):
        kc = draw_choices(cfg, rng, x)
        assert kc == g.key(x)


def test_dump_and_load_roundtrip():
    cfg = Config(c=0.9, m=200, s=20, k_p=2, k_b=1)
    g = generate(cfg, Rng(4))
    buf = io.StringIO()
    dump_graph(g, buf)
    lines = buf.getvalue().strip().split("\n")
    assert len(lines) == g.n
    first = lines[0].split()
    assert len(first) == 3 + cfg.k
    g2 = load_graph(cfg, io.StringIO(buf.getvalue()))
    assert np.array_equal(g.cells, g2.cells)
    assert np.array_equal(g.pages, g2.pages)
