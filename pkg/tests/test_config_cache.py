import numpy as np
import pytest

from nodallab.cache import CacheError, read_cache, write_cache
from nodallab.config import ConfigError, RunConfig, config_hash, normalize_config


class TestConfig:
    def test_defaults_filled(self):
        cfg = normalize_config({})
        assert cfg["geometry"]["dim"] == 2
        assert cfg["geometry"]["n"] == 32
        assert cfg["solver"]["k"] == 8
        assert cfg["nodal"]["sample_count"] == 500
        assert cfg["sphere"]["m"] == [1, 2, 3, 4]

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown keys"):
            normalize_config({"geomtry": {}})

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown keys in solver"):
            normalize_config({"solver": {"weight": 1}})

    def test_flux_validation(self):
        with pytest.raises(ConfigError, match="antisymmetric"):
            normalize_config({"geometry": {"flux": [[0, 1], [1, 0]]}})
        with pytest.raises(ConfigError, match="shorthand"):
            normalize_config({"geometry": {"dim": 3, "flux": 1}})

    def test_seed_inherited_by_random_specs(self):
        cfg = normalize_config({"geometry": {
            "seed": 42,
            "u_spec": {"kind": "random_fourier", "amplitude": 0.1},
            "beta_spec": {"kind": "random_fourier_form", "amplitude": 0.2},
        }})
        assert cfg["geometry"]["u_spec"]["seed"] == 42
        assert cfg["geometry"]["beta_spec"]["seed"] == 1042

    def test_hash_stable_and_sensitive(self):
        a = normalize_config({"geometry": {"n": 16}})
        b = normalize_config({"geometry": {"n": 16}})
        c = normalize_config({"geometry": {"n": 24}})
        assert config_hash(a) == config_hash(b)
        assert config_hash(a) != config_hash(c)

    def test_build_geometry(self):
        cfg = RunConfig({"geometry": {"n": 12, "flux": 2}})
        grid = cfg.build_grid()
        conn = cfg.build_connection(grid)
        assert grid.n == 12
        assert conn.measured_flux()[0, 1] == 2
        assert cfg.flux_matrix()[0, 1] == 2

    def test_bad_field_spec_rejected(self):
        with pytest.raises(ConfigError, match="cosine"):
            normalize_config({"geometry": {"u_spec": {"kind": "cosine"}}})
        with pytest.raises(ConfigError, match="kind"):
            normalize_config({"geometry": {"u_spec": {"kind": "sawtooth"}}})


class TestCache:
    def _write(self, path, cfg_hash, k=3, n=8, dim=2, m=1, seed=7):
        rng = np.random.default_rng(0)
        lams = np.sort(rng.uniform(0, 10, size=k))
        secs = rng.normal(size=(k, n ** dim)) + 1j * rng.normal(size=(k, n ** dim))
        flux = np.array([[0, 1], [-1, 0]])
        write_cache(path, dim, n, m, seed, flux, cfg_hash, lams, secs)
        return lams, secs, flux

    def test_round_trip_bitwise(self, tmp_path):
        path = tmp_path / "eigs.nbl"
        cfg_hash = config_hash(normalize_config({}))
        lams, secs, flux = self._write(path, cfg_hash)
        blob1 = path.read_bytes()
        loaded = read_cache(path, expected_hash=cfg_hash)
        assert loaded.k == 3
        assert np.array_equal(loaded.eigenvalues, lams)
        assert np.array_equal(loaded.sections, secs)
        assert np.array_equal(loaded.flux, flux)
        assert loaded.seed == 7
        write_cache(tmp_path / "copy.nbl", loaded.dim, loaded.n, loaded.m, loaded.seed,
                    loaded.flux, loaded.config_hash, loaded.eigenvalues, loaded.sections)
        assert (tmp_path / "copy.nbl").read_bytes() == blob1

    def test_magic_checked(self, tmp_path):
        path = tmp_path / "bad.nbl"
        path.write_bytes(b"XXXX" + b"\0" * 64)
        with pytest.raises(CacheError, match="magic"):
            read_cache(path)

    def test_hash_mismatch_is_hard_error(self, tmp_path):
        path = tmp_path / "eigs.nbl"
        h1 = config_hash(normalize_config({}))
        h2 = config_hash(normalize_config({"geometry": {"n": 24}}))
        self._write(path, h1)
        with pytest.raises(CacheError, match="produced by config"):
            read_cache(path, expected_hash=h2)

    def test_no_temp_files_left(self, tmp_path):
        path = tmp_path / "eigs.nbl"
        self._write(path, config_hash(normalize_config({})))
        leftovers = [p for p in tmp_path.iterdir() if p.name.startswith(".tmp-")]
        assert leftovers == []

    def test_header_layout_documented(self, tmp_path):
        # magic | dim u32 | n u32 | m i32 | k u32 | seed u64 | flux | sha256
        path = tmp_path / "eigs.nbl"
        cfg_hash = config_hash(normalize_config({}))
        self._write(path, cfg_hash, k=2, n=8, dim=2, m=-3, seed=99)
        blob = path.read_bytes()
        assert blob[:4] == b"NBL1"
        import struct
        dim, n, m, k, seed = struct.unpack_from("<IIiIQ", blob, 4)
        assert (dim, n, m, k, seed) == (2, 8, -3, 2, 99)
        off = 4 + struct.calcsize("<IIiIQ") + 4 * dim * dim
        assert blob[off:off + 32] == bytes.fromhex(cfg_hash)
