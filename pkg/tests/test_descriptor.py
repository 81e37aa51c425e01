import numpy as np
import pytest

from atomcover import (
    Dataset,
    DegenerateGeometryError,
    DescriptorParams,
    DescriptorSet,
    InputError,
    build_descriptor_set,
    compute_x1,
    compute_x2,
    cutoff_weight,
    load_descriptor_set,
    nearest_neighbors,
    save_descriptor_set,
)
from helpers import (
    assert_row_multisets_close,
    crystal,
    dataset,
    molecule,
    naive_x1,
    naive_x2,
    perturbed_cubic,
    random_rotation,
)


class TestCutoffWeight:
    def test_reference_values(self):
        assert cutoff_weight(0.0, 5.0) == 1.0
        assert cutoff_weight(5.0, 5.0) == 0.0
        assert cutoff_weight(6.0, 5.0) == 0.0
        assert cutoff_weight(2.5, 5.0) == pytest.approx(0.5625, abs=0)

    def test_smooth_at_cutoff(self):
        # value and slope both vanish at the cutoff
        eps = 1e-6
        assert cutoff_weight(5.0 - eps, 5.0) < 1e-11
        slope = (cutoff_weight(5.0, 5.0) - cutoff_weight(5.0 - eps, 5.0)) / eps
        assert abs(slope) < 1e-5

    def test_monotone_decreasing(self):
        r = np.linspace(0, 5, 200)
        w = cutoff_weight(r, 5.0)
        assert np.all(np.diff(w) <= 0)
        assert np.all((w >= 0) & (w <= 1))

    def test_array_input(self):
        w = cutoff_weight(np.array([0.0, 2.5, 5.0, np.inf]), 5.0)
        assert np.allclose(w, [1.0, 0.5625, 0.0, 0.0])

    def test_rejects_negative_distance(self):
        with pytest.raises(InputError):
            cutoff_weight(-1.0, 5.0)

    def test_rejects_bad_cutoff(self):
        with pytest.raises(InputError):
            cutoff_weight(1.0, 0.0)


class TestParams:
    def test_width(self):
        assert DescriptorParams(n_neighbors=32, cutoff=5.0).width == 63
        assert DescriptorParams(n_neighbors=2, cutoff=1.0).width == 3

    def test_validation(self):
        with pytest.raises(InputError):
            DescriptorParams(n_neighbors=1)
        with pytest.raises(InputError):
            DescriptorParams(cutoff=-2.0)


class TestTwoBody:
    def test_dimer(self):
        params = DescriptorParams(n_neighbors=32, cutoff=5.0)
        s = molecule([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        nb = nearest_neighbors(s, 32, search_radius=5.0)[0]
        x1 = compute_x1(nb, params)
        w = (1 - (2.0 / 5.0) ** 2) ** 2
        assert x1[0] == pytest.approx(w / 2.0, abs=1e-15)  # 0.3528
        assert np.all(x1[1:] == 0)

    def test_radial_order_not_value_order(self):
        # near neighbor beyond-cutoff value is 0 but stays in its slot
        params = DescriptorParams(n_neighbors=4, cutoff=2.5)
        s = molecule([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 3.0, 0.0]])
        nb = nearest_neighbors(s, 4, search_radius=6.0)[0]
        x1 = compute_x1(nb, params)
        assert x1[0] > 0       # r=2.0 inside cutoff
        assert x1[1] == 0.0    # r=3.0 beyond cutoff
        assert np.all(x1[2:] == 0)

    def test_matches_naive_loops(self):
        rng = np.random.default_rng(21)
        params = DescriptorParams(n_neighbors=12, cutoff=4.0)
        s = perturbed_cubic(rng, n_side=2, a=2.8)
        for nb in nearest_neighbors(s, 12, search_radius=4.0):
            assert np.allclose(
                compute_x1(nb, params), naive_x1(nb, 12, 4.0), atol=1e-12
            )


class TestThreeBody:
    def test_two_neighbors_single_term(self):
        # center with two neighbors at r, separated by d:
        # each j has one term sqrt(w(r)w(r))/d = w(r)/d
        params = DescriptorParams(n_neighbors=8, cutoff=5.0)
        r, half_angle = 2.0, np.pi / 6
        s = molecule(
            [
                [0.0, 0.0, 0.0],
                [r * np.cos(half_angle), r * np.sin(half_angle), 0.0],
                [r * np.cos(half_angle), -r * np.sin(half_angle), 0.0],
            ]
        )
        nb = nearest_neighbors(s, 8, search_radius=5.0)[0]
        x2 = compute_x2(nb, params)
        d = 2 * r * np.sin(half_angle)
        w = (1 - (r / 5.0) ** 2) ** 2
        assert x2[0] == pytest.approx(w / d, rel=1e-12)
        assert np.all(x2[1:] == 0)

    def test_isolated_pair_is_zero(self):
        params = DescriptorParams(n_neighbors=8, cutoff=5.0)
        s = molecule([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        nb = nearest_neighbors(s, 8, search_radius=5.0)[0]
        assert np.all(compute_x2(nb, params) == 0)

    def test_entries_descending(self):
        rng = np.random.default_rng(8)
        params = DescriptorParams(n_neighbors=10, cutoff=4.5)
        s = perturbed_cubic(rng, n_side=2, a=2.9)
        for nb in nearest_neighbors(s, 10, search_radius=4.5):
            x2 = compute_x2(nb, params)
            assert np.all(np.diff(x2) <= 1e-15)

    def test_matches_naive_loops(self):
        rng = np.random.default_rng(22)
        params = DescriptorParams(n_neighbors=12, cutoff=4.0)
        s = perturbed_cubic(rng, n_side=2, a=2.8)
        for nb in nearest_neighbors(s, 12, search_radius=4.0):
            assert np.allclose(
                compute_x2(nb, params), naive_x2(nb, 12, 4.0), atol=1e-12
            )


class TestInvariances:
    def setup_method(self):
        rng = np.random.default_rng(7)
        self.params = DescriptorParams(n_neighbors=8, cutoff=4.0)
        self.mol_positions = rng.random((6, 3)) * 3.0

    def _rows(self, positions):
        ds = dataset(molecule(positions))
        return build_descriptor_set(ds, self.params).values

    def test_translation(self):
        base = self._rows(self.mol_positions)
        shifted = self._rows(self.mol_positions + np.array([11.0, -3.0, 0.5]))
        assert np.allclose(base, shifted, atol=1e-10)

    def test_rotation(self):
        rng = np.random.default_rng(9)
        base = self._rows(self.mol_positions)
        for _ in range(3):
            rot = random_rotation(rng)
            rotated = self._rows(self.mol_positions @ rot.T)
            assert np.allclose(base, rotated, atol=1e-10)

    def test_permutation(self):
        rng = np.random.default_rng(10)
        base = self._rows(self.mol_positions)
        perm = rng.permutation(len(self.mol_positions))
        permuted = self._rows(self.mol_positions[perm])
        assert np.allclose(base[perm], permuted, atol=1e-10)

    def test_species_never_enter(self):
        ds_a = dataset(molecule(self.mol_positions, species=("H",) * 6))
        ds_b = dataset(molecule(self.mol_positions, species=("Au",) * 6))
        a = build_descriptor_set(ds_a, self.params).values
        b = build_descriptor_set(ds_b, self.params).values
        assert np.array_equal(a, b)

    def test_supercell_multiset(self):
        rng = np.random.default_rng(12)
        primitive = perturbed_cubic(rng, n_side=2, a=2.9)  # 8 atoms
        reps = []
        for na in range(2):
            for nb in range(2):
                for nc in range(2):
                    shift = np.array([na, nb, nc], dtype=float) @ primitive.cell
                    reps.append(primitive.positions + shift)
        supercell = crystal(primitive.cell * 2, np.vstack(reps))
        prim_rows = build_descriptor_set(dataset(primitive), self.params).values
        super_rows = build_descriptor_set(dataset(supercell), self.params).values
        assert super_rows.shape[0] == 8 * prim_rows.shape[0]
        assert_row_multisets_close(super_rows, np.tile(prim_rows, (8, 1)), atol=1e-8)


class TestBuildErrors:
    def test_coincident_atoms_name_the_place(self):
        params = DescriptorParams(n_neighbors=4, cutoff=5.0)
        good = molecule([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        bad = molecule([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        with pytest.raises(DegenerateGeometryError, match="structure 1"):
            build_descriptor_set(dataset(good, bad), params)


class TestDescriptorSet:
    def _make(self, sizes, width=5, seed=0):
        rng = np.random.default_rng(seed)
        values = rng.random((sum(sizes), width))
        offsets, pos = [], 0
        for n in sizes:
            offsets.append((pos, n))
            pos += n
        return DescriptorSet(values=values, offsets=np.array(offsets))

    def test_offsets_partition_dataset(self):
        params = DescriptorParams(n_neighbors=4, cutoff=4.0)
        ds = dataset(
            molecule([[0.0, 0.0, 0.0], [1.5, 0.0, 0.0]]),
            molecule([[0.0, 0.0, 0.0], [0.0, 1.2, 0.0], [0.0, 0.0, 1.8]]),
        )
        descs = build_descriptor_set(ds, params)
        assert descs.n_environments == 5
        assert descs.offsets.tolist() == [[0, 2], [2, 3]]
        assert descs.rows_for(1).shape == (3, params.width)

    def test_rejects_gap_in_offsets(self):
        with pytest.raises(InputError):
            DescriptorSet(values=np.zeros((4, 3)), offsets=np.array([(0, 2), (3, 1)]))

    def test_rejects_short_coverage(self):
        with pytest.raises(InputError):
            DescriptorSet(values=np.zeros((4, 3)), offsets=np.array([(0, 2)]))

    def test_rejects_nonfinite(self):
        values = np.zeros((2, 3))
        values[1, 1] = np.nan
        with pytest.raises(InputError):
            DescriptorSet(values=values, offsets=np.array([(0, 2)]))

    def test_rejects_width_param_mismatch(self):
        with pytest.raises(InputError):
            DescriptorSet(
                values=np.zeros((2, 5)),
                offsets=np.array([(0, 2)]),
                params=DescriptorParams(n_neighbors=4),  # width 7
            )

    def test_subset_keeps_order_and_rows(self):
        descs = self._make([2, 3, 1, 4])
        sub = descs.subset([2, 0])
        assert sub.n_structures == 2
        assert np.array_equal(sub.rows_for(0), descs.rows_for(2))
        assert np.array_equal(sub.rows_for(1), descs.rows_for(0))
        assert sub.offsets.tolist() == [[0, 1], [1, 2]]

    def test_subset_rejects_duplicates_and_range(self):
        descs = self._make([2, 2])
        with pytest.raises(InputError):
            descs.subset([0, 0])
        with pytest.raises(InputError):
            descs.subset([5])
        with pytest.raises(InputError):
            descs.subset([])


class TestCache:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(30)
        params = DescriptorParams(n_neighbors=6, cutoff=3.5)
        ds = dataset(
            perturbed_cubic(rng, n_side=2, a=2.8),
            molecule(rng.random((4, 3)) * 3.0),
        )
        descs = build_descriptor_set(ds, params)
        path = tmp_path / "cache.acds"
        save_descriptor_set(descs, path)
        loaded = load_descriptor_set(path)
        assert loaded.params == params
        assert np.array_equal(loaded.values, descs.values)
        assert np.array_equal(loaded.offsets, descs.offsets)

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "junk.acds"
        path.write_bytes(b"not a cache at all")
        with pytest.raises(InputError):
            load_descriptor_set(path)

    def test_requires_params(self, tmp_path):
        descs = DescriptorSet(values=np.zeros((1, 3)), offsets=np.array([(0, 1)]))
        with pytest.raises(InputError):
            save_descriptor_set(descs, tmp_path / "x.acds")
