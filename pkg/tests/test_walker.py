import numpy as np
import pytest

from conftest import make_law
from rwre.environment import SiteLaw, law_from_spec
from rwre.errors import FormatError, ReinforcementError
from rwre.lattice import GroupElement, JumpSet, MultiIndex
from rwre.walker import (
    Trajectory,
    annealed_oracle,
    format_trajectory,
    parse_trajectory,
    quenched_environment,
    read_trajectory,
    simulate_quenched,
    simulate_quenched_batch,
    simulate_reinforced,
    simulate_reinforced_batch,
    write_trajectory,
)

G = GroupElement.of
P, M = G(1), G(-1)


def test_deterministic_drift():
    law = law_from_spec([[1]], {"kind": "mixture", "atoms": [{"w": 1, "p": [1]}]})
    assert simulate_quenched(law, 1, 5).jumps == [P] * 5
    assert len(simulate_quenched(law, 1, 0)) == 0


def test_example1_first_jump():
    runs = simulate_quenched_batch(make_law("fixed12"), 8, 10_000, 1)
    assert abs((runs[:, 0] == 0).mean() - 0.5) <= 0.02


def test_quenched_walk_follows_its_environment(backend):
    law = make_law("mixture")
    traj = simulate_quenched(law, 12, 20_000, backend=backend)
    env = quenched_environment(law, 12, backend)
    pos = traj.positions()[:-1, 0]
    # sites whose realized law is (0.9, 0.1) for +1 should be left by +1 about 90% of the time
    ups = [j == P for x, j in zip(pos.tolist(), traj.jumps) if env.site_law(G(x))[P] == 0.9]
    assert len(ups) > 1000 and abs(np.mean(ups) - 0.9) < 0.03


def test_seed_determinism(backend):
    law = make_law("dirichlet21")
    a = simulate_quenched(law, 3, 5000, backend=backend)
    assert a == simulate_quenched(law, 3, 5000, backend=backend)
    assert a != simulate_quenched(law, 4, 5000, backend=backend)
    b = simulate_reinforced(annealed_oracle(law), law.jumps, 3, 2000, backend=backend)
    assert b == simulate_reinforced(annealed_oracle(law), law.jumps, 3, 2000, backend=backend)


def test_reinforced_constant():
    js = JumpSet([P, M])
    traj = simulate_reinforced(lambda n: SiteLaw.from_mapping(js, {P: 1.0}), js, 1, 10)
    assert traj.jumps == [P] * 10


def test_reinforced_accepts_plain_mappings():
    js = JumpSet([P, M])
    traj = simulate_reinforced(lambda n: {"[1]": 0.25, "[-1]": 0.75}, js, 1, 4000)
    assert abs(np.mean([j == P for j in traj.jumps]) - 0.25) < 0.03


def test_reinforced_first_jump_dirichlet():
    law = make_law("dirichlet21")
    runs = simulate_reinforced_batch(annealed_oracle(law), law.jumps, 5, 10_000, 1)
    assert abs((runs[:, 0] == law.jumps.index(P)).mean() - 2 / 3) <= 0.02


def test_reinforced_return_to_origin_mixture():
    law = make_law("mixture")
    runs = simulate_reinforced_batch(annealed_oracle(law), law.jumps, 6, 20_000, 60)
    iP = law.jumps.index(P)
    steps = law.jumps.coords[runs][:, :, 0]
    pos = np.cumsum(steps, axis=1)
    hits = []
    for r in np.flatnonzero(runs[:, 0] == iP):
        back = np.flatnonzero(pos[r, :-1] == 0)
        if len(back):
            hits.append(runs[r, back[0] + 1] == iP)
    assert len(hits) > 3000
    assert abs(np.mean(hits) - 0.82) <= 0.03


def test_reinforcement_errors_are_wrapped():
    js = JumpSet([P, M])

    def fails_on_return(n):
        if n.total:
            raise RuntimeError("boom")
        return {P: 0.5, M: 0.5}

    with pytest.raises(ReinforcementError) as info:
        simulate_reinforced(fails_on_return, js, 1, 1000)
    assert "boom" in str(info.value)
    assert info.value.history.total >= 1
    with pytest.raises(ReinforcementError):
        simulate_reinforced(lambda n: {P: 0.5}, js, 1, 3)


def test_file_round_trip(tmp_path):
    law = make_law("mixture")
    traj = simulate_quenched(law, 1, 300)
    traj.meta.update(replica=2, truncated=True)
    text = format_trajectory(traj)
    assert text.splitlines()[0] == "#rwre-traj v1 dim=1 replica=2 truncated=true"
    back = parse_trajectory(text, law.jumps)
    assert back == traj and back.meta == {"replica": 2, "truncated": True}
    assert format_trajectory(back) == text
    write_trajectory(tmp_path / "t.txt", traj)
    assert read_trajectory(tmp_path / "t.txt") == traj


def test_empty_file_round_trip():
    text = "#rwre-traj v1 dim=2\n"
    traj = parse_trajectory(text)
    assert len(traj) == 0 and traj.dim == 2
    assert format_trajectory(traj) == text


@pytest.mark.parametrize("text, line", [
    ("[1]\n", 1),
    ("#rwre-traj v1\n[1]\n", 1),
    ("#rwre-traj v1 dim=1\n[1]\n[1,2]\n", 3),
    ("#rwre-traj v1 dim=1\n[1]\nfoo\n", 3),
    ("#rwre-traj v1 dim=1\n[1]\n[5]\n", 3),
])
def test_format_errors_name_the_line(text, line):
    with pytest.raises(FormatError) as info:
        parse_trajectory(text, JumpSet([P, M]))
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


def test_positions_and_site_ids():
    traj = Trajectory.from_jumps([P, M, P, P])
    assert traj.positions()[:, 0].tolist() == [0, 1, 0, 1, 2]
    ids, n = traj.site_ids()
    assert n == 3 and ids.tolist() == [0, 1, 0, 1, 2]
    t2 = Trajectory.from_jumps([G(1, 0), G(0, 1), G(-1, 0)])
    assert t2.positions().tolist() == [[0, 0], [1, 0], [1, 1], [0, 1]]
    assert t2.site_ids()[1] == 4


def test_high_dimension_falls_back_to_python():
    # radix**d overflows int64, so the pure-Python kernel takes over
    js = JumpSet([GroupElement(tuple(1 if i == k else 0 for i in range(12))) for k in range(12)])
    law = law_from_spec([list(e.coords) for e in js], {"kind": "dirichlet", "alphas": [1.0] * 12})
    traj = simulate_quenched(law, 2, 200)
    assert len(traj) == 200 and traj.dim == 12
