import numpy as np
import pytest

from refless.exceptions import FormatError, NoMisalignmentError
from refless.remap import (
    BilingualLexicon,
    CLPProjection,
    RemapPipeline,
    UMDProjection,
    dominant_right_singular_vector,
    fit_clp,
    fit_pipeline,
    fit_umd,
    jacobi_svd,
    load_transform,
    parse_pipeline_spec,
    save_transform,
)

from conftest import make_space, random_orthogonal


class TestJacobiSvd:
    def test_identity(self):
        U, s, V = jacobi_svd(np.eye(4))
        np.testing.assert_allclose(s, np.ones(4), atol=1e-12)

    def test_diagonal(self):
        _, s, _ = jacobi_svd(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(s, [3.0, 1.0], atol=1e-12)

    def test_random_reconstruction(self, rng):
        for _ in range(20):
            M = rng.normal(size=(8, 8))
            U, s, V = jacobi_svd(M)
            rebuilt = U @ np.diag(s) @ V.T
            assert np.linalg.norm(rebuilt - M) <= 1e-8 * np.linalg.norm(M)
            assert np.linalg.norm(U.T @ U - np.eye(8)) <= 1e-8
            assert np.linalg.norm(V.T @ V - np.eye(8)) <= 1e-8
            assert np.all(np.diff(s) <= 1e-12)
            assert np.all(s >= 0)

    def test_matches_lapack_singular_values(self, rng):
        M = rng.normal(size=(6, 6))
        _, s, _ = jacobi_svd(M)
        np.testing.assert_allclose(s, np.linalg.svd(M, compute_uv=False), atol=1e-10)

    def test_rank_deficient_keeps_orthogonal_factors(self, rng):
        u = rng.normal(size=5)
        v = rng.normal(size=5)
        M = np.outer(u, v)  # rank 1
        U, s, V = jacobi_svd(M)
        assert np.linalg.norm(U.T @ U - np.eye(5)) <= 1e-8
        np.testing.assert_allclose(U @ np.diag(s) @ V.T, M, atol=1e-10)
        assert (s > 1e-10).sum() == 1

    def test_zero_matrix(self):
        U, s, V = jacobi_svd(np.zeros((3, 3)))
        np.testing.assert_array_equal(s, np.zeros(3))
        np.testing.assert_allclose(U.T @ U, np.eye(3), atol=1e-12)

    def test_non_square_rejected(self):
        with pytest.raises(ValueError, match="square"):
            jacobi_svd(np.zeros((2, 3)))


class TestClp:
    def test_identity_pairs_give_identity(self, rng):
        X = rng.normal(size=(40, 6))
        step = CLPProjection().fit(X, X)
        assert np.linalg.norm(step.matrix_ - np.eye(6)) <= 1e-8

    def test_planted_rotation_recovery(self, rng):
        X = rng.normal(size=(200, 16))
        R = random_orthogonal(rng, 16)
        step = CLPProjection().fit(X, X @ R)
        assert np.linalg.norm(step.matrix_ - R) <= 1e-6

    def test_orthogonality_always(self, rng):
        for _ in range(10):
            n, d = int(rng.integers(2, 40)), int(rng.integers(2, 10))
            X, Y = rng.normal(size=(n, d)), rng.normal(size=(n, d))
            with np.errstate(all="ignore"):
                step = CLPProjection().fit(X, Y)
            W = step.matrix_
            assert np.linalg.norm(W.T @ W - np.eye(d)) <= 1e-8

    def test_never_increases_training_residual(self, rng):
        X, Y = rng.normal(size=(30, 5)), rng.normal(size=(30, 5))
        step = CLPProjection().fit(X, Y)
        assert np.linalg.norm(X @ step.matrix_ - Y) <= np.linalg.norm(X - Y) + 1e-9

    def test_optimal_among_random_orthogonals(self, rng):
        for n in (2, 4, 6):
            X, Y = rng.normal(size=(n, 2)), rng.normal(size=(n, 2))
            step = CLPProjection().fit(X, Y)
            fitted = np.linalg.norm(X @ step.matrix_ - Y)
            thetas = rng.uniform(0, 2 * np.pi, size=10_000)
            reflect = rng.integers(0, 2, size=10_000)
            for theta, flip in zip(thetas, reflect):
                c, s = np.cos(theta), np.sin(theta)
                W = np.array([[c, s], [s, -c]]) if flip else np.array([[c, -s], [s, c]])
                assert fitted <= np.linalg.norm(X @ W - Y) + 1e-9

    def test_transform_applies_row_convention(self, rng):
        X = rng.normal(size=(10, 4))
        R = random_orthogonal(rng, 4)
        step = CLPProjection().fit(X, X @ R)
        np.testing.assert_allclose(step.transform(X[0]), X[0] @ R, atol=1e-6)

    def test_warns_below_dimension(self, rng):
        X = rng.normal(size=(3, 8))
        with pytest.warns(UserWarning, match="recommended"):
            CLPProjection().fit(X, X)

    def test_zero_pairs_rejected(self):
        with pytest.raises(ValueError, match="zero pairs"):
            CLPProjection().fit(np.zeros((0, 3)), np.zeros((0, 3)))

    def test_deterministic(self, rng):
        X, Y = rng.normal(size=(50, 7)), rng.normal(size=(50, 7))
        a = CLPProjection().fit(X, Y)
        b = CLPProjection().fit(X, Y)
        assert np.array_equal(a.matrix_, b.matrix_)


class TestUmd:
    def test_planted_constant_offset(self, rng):
        b = rng.normal(size=10)
        b /= np.linalg.norm(b)
        Y = rng.normal(size=(200, 10))
        X = Y + b + 0.01 * rng.normal(size=(200, 10))
        step = UMDProjection().fit(X, Y)
        assert abs(step.direction_ @ b) >= 0.99
        assert abs(np.linalg.norm(step.direction_) - 1.0) <= 1e-10

    def test_rank_one_difference(self):
        Y = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 1.0], [2.0, 0.0, 1.0]])
        X = Y.copy()
        X[1, 0] += 0.5  # single offset along e1
        step = UMDProjection().fit(X, Y)
        np.testing.assert_allclose(np.abs(step.direction_), [1.0, 0.0, 0.0], atol=1e-6)

    def test_zero_difference_rejected(self, rng):
        X = rng.normal(size=(5, 4))
        with pytest.raises(NoMisalignmentError):
            UMDProjection().fit(X, X.copy())

    def test_sign_convention(self, rng):
        b = np.zeros(6)
        b[2] = -1.0  # offset pointing negative; direction must flip
        Y = rng.normal(size=(50, 6))
        step = UMDProjection().fit(Y + b, Y)
        assert step.direction_[np.argmax(np.abs(step.direction_))] > 0

    def test_unit_input_becomes_orthogonal(self, rng):
        Y = rng.normal(size=(50, 8))
        step = UMDProjection().fit(Y + rng.normal(size=8), Y)
        for _ in range(20):
            v = rng.normal(size=8)
            v /= np.linalg.norm(v)
            assert abs(step.transform(v) @ step.direction_) <= 1e-9

    def test_scaled_direction_input(self, rng):
        # v = 2 v_B maps to v_B, not zero: the cosine form is scale-sensitive
        Y = rng.normal(size=(30, 5))
        step = UMDProjection().fit(Y + rng.normal(size=5), Y)
        out = step.transform(2.0 * step.direction_)
        np.testing.assert_allclose(out, step.direction_, atol=1e-9)

    def test_zero_vector_passes_through(self, rng):
        Y = rng.normal(size=(30, 5))
        step = UMDProjection().fit(Y + rng.normal(size=5), Y)
        np.testing.assert_array_equal(step.transform(np.zeros(5)), np.zeros(5))

    def test_idempotent_on_renormalized_output(self, rng):
        Y = rng.normal(size=(40, 6))
        step = UMDProjection().fit(Y + rng.normal(size=6), Y)
        for _ in range(10):
            v = rng.normal(size=6)
            v /= np.linalg.norm(v)
            mapped = step.transform(v)
            unit = mapped / np.linalg.norm(mapped)
            assert np.linalg.norm(step.transform(unit) - unit) <= 1e-9

    def test_too_few_pairs(self, rng):
        with pytest.raises(ValueError, match="at least 2"):
            UMDProjection().fit(rng.normal(size=(1, 3)), rng.normal(size=(1, 3)))

    def test_power_iteration_matches_lapack(self, rng):
        Q = rng.normal(size=(60, 9))
        v = dominant_right_singular_vector(Q)
        ref = np.linalg.svd(Q)[2][0]
        assert min(np.linalg.norm(v - ref), np.linalg.norm(v + ref)) <= 1e-8


class TestPipeline:
    def test_single_clp_step_matches_direct_fit(self, rng):
        X, Y = rng.normal(size=(50, 6)), rng.normal(size=(50, 6))
        pipe = RemapPipeline(steps=["clp"]).fit(X, Y)
        direct = CLPProjection().fit(X, Y)
        assert np.array_equal(pipe.fitted_steps_[0].matrix_, direct.matrix_)

    def test_composition_beats_single_steps(self):
        rng = np.random.default_rng(42)
        n, d = 300, 12
        X0 = rng.normal(size=(n, d))
        R = random_orthogonal(rng, d)
        b = np.zeros(d)
        b[0] = 1.0
        X = X0 + 3.0 * b  # offset corruption on the source side
        Y = X0 @ R  # rotation corruption between the spaces
        residuals = {
            tuple(steps): RemapPipeline(steps=steps).fit(X, Y).residual_after_
            for steps in (["clp"], ["umd"], ["umd", "clp"])
        }
        assert residuals[("umd", "clp")] < residuals[("clp",)]
        assert residuals[("umd", "clp")] < residuals[("umd",)]

    def test_steps_fitted_on_transformed_vectors(self, rng):
        X, Y = rng.normal(size=(80, 5)), rng.normal(size=(80, 5))
        pipe = RemapPipeline(steps=["umd", "clp"]).fit(X, Y)
        umd, clp = pipe.fitted_steps_
        Xu, Yu = umd.transform(X), umd.transform(Y)
        refit = CLPProjection().fit(Xu, Yu)
        assert np.array_equal(clp.matrix_, refit.matrix_)

    def test_target_side_skips_clp(self, rng):
        X, Y = rng.normal(size=(30, 4)), rng.normal(size=(30, 4))
        pipe = RemapPipeline(steps=["clp"]).fit(X, Y)
        np.testing.assert_array_equal(pipe.transform_target(Y), Y)

    def test_empty_steps_rejected(self, rng):
        with pytest.raises(ValueError, match="at least one step"):
            RemapPipeline(steps=[]).fit(rng.normal(size=(5, 2)), rng.normal(size=(5, 2)))

    def test_unknown_step_rejected(self, rng):
        with pytest.raises(ValueError, match="unknown"):
            RemapPipeline(steps=["xyz"]).fit(rng.normal(size=(5, 2)), rng.normal(size=(5, 2)))


class TestSpecParsing:
    def test_rightmost_applies_first(self):
        assert parse_pipeline_spec("clp.umd") == ["umd", "clp"]
        assert parse_pipeline_spec("umd") == ["umd"]

    def test_round_trip_through_pipeline(self, rng):
        X, Y = rng.normal(size=(30, 3)), rng.normal(size=(30, 3))
        pipe = RemapPipeline(steps=parse_pipeline_spec("clp.umd")).fit(X, Y)
        assert pipe.spec_string() == "clp.umd"

    def test_bad_specs(self):
        for spec in ("xyz", "clp..umd", "", "clp,umd"):
            with pytest.raises(ValueError):
                parse_pipeline_spec(spec)


class TestLexiconFitting:
    def build_spaces(self, rng):
        src_tokens = [f"s{i}" for i in range(30)]
        tgt_tokens = [f"t{i}" for i in range(30)]
        X = rng.normal(size=(30, 4))
        R = random_orthogonal(rng, 4)
        return make_space(src_tokens, X), make_space(tgt_tokens, X @ R), R

    def test_fit_clp_from_lexicon(self, rng):
        src, tgt, R = self.build_spaces(rng)
        lexicon = BilingualLexicon(tuple((f"s{i}", f"t{i}") for i in range(30)))
        step = fit_clp(lexicon, src, tgt)
        assert np.linalg.norm(step.matrix_ - R) <= 1e-6
        assert step.n_pairs_ == 30

    def test_unresolvable_pairs_skipped_with_warning(self, rng):
        src, tgt, _ = self.build_spaces(rng)
        pairs = tuple((f"s{i}", f"t{i}") for i in range(30)) + (("nope", "t0"),)
        with pytest.warns(UserWarning, match="skipped"):
            step = fit_clp(BilingualLexicon(pairs), src, tgt)
        assert step.n_pairs_ == 30

    def test_all_unresolvable_rejected(self, rng):
        src, tgt, _ = self.build_spaces(rng)
        with pytest.raises(ValueError, match="no resolvable"):
            fit_clp(BilingualLexicon((("nope", "nada"),)), src, tgt)

    def test_fit_umd_from_lexicon(self, rng):
        src, tgt, _ = self.build_spaces(rng)
        lexicon = BilingualLexicon(tuple((f"s{i}", f"t{i}") for i in range(30)))
        step = fit_umd(lexicon, src, tgt)
        assert abs(np.linalg.norm(step.direction_) - 1.0) <= 1e-10

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_sentence_kind_pools(self, rng):
        src, tgt, _ = self.build_spaces(rng)
        lexicon = BilingualLexicon(
            (("s0 s1", "t0 t1"), ("s2 s3 s4", "t2 t3 t4")), kind="sentence"
        )
        pipe = fit_pipeline(["clp"], lexicon, src, tgt)
        assert pipe.n_pairs_ == 2


class TestSerialization:
    def fitted_pipeline(self, rng):
        X = rng.normal(size=(40, 6))
        R = random_orthogonal(rng, 6)
        return RemapPipeline(steps=["umd", "clp"]).fit(X + rng.normal(size=6), X @ R)

    def test_bitwise_round_trip(self, tmp_path, rng):
        pipe = self.fitted_pipeline(rng)
        first = tmp_path / "t1.txt"
        save_transform(pipe, first)
        loaded = load_transform(first)
        again = tmp_path / "t2.txt"
        save_transform(loaded, again)
        assert first.read_bytes() == again.read_bytes()
        assert np.array_equal(loaded.fitted_steps_[0].direction_, pipe.fitted_steps_[0].direction_)
        assert np.array_equal(loaded.fitted_steps_[1].matrix_, pipe.fitted_steps_[1].matrix_)

    def test_loaded_pipeline_transforms_identically(self, tmp_path, rng):
        pipe = self.fitted_pipeline(rng)
        path = tmp_path / "t.txt"
        save_transform(pipe, path)
        loaded = load_transform(path)
        V = rng.normal(size=(7, 6))
        assert np.array_equal(loaded.transform(V), pipe.transform(V))
        assert np.array_equal(loaded.transform_target(V), pipe.transform_target(V))

    def test_bad_file_rejected(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("not a transform\n")
        with pytest.raises(FormatError):
            load_transform(path)

    def test_truncated_file_rejected(self, tmp_path, rng):
        pipe = self.fitted_pipeline(rng)
        path = tmp_path / "t.txt"
        save_transform(pipe, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-2]) + "\n")
        with pytest.raises(FormatError):
            load_transform(path)
