import numpy as np
import pytest

from treemax import (
    CarlesonSequence,
    SimpleFunction,
    WeightPair,
    build_random_tree,
    build_uniform_dyadic,
    carleson_constant,
    carleson_from_linearization,
    cpq,
    dual_weight,
    embedding_check,
    frac_maximal,
    linearize,
    main_inequality_check,
    node_integrals,
    operator_norm_lower,
    weighted_lp_norm,
)
from treemax import testing_constant as get_testing_constant
from treemax import testing_ratios as get_testing_ratios
from treemax.fuzz import (
    dump_case,
    load_case,
    random_carleson_sequence,
    random_function,
    random_instance,
    random_weight_pair,
)

from conftest import brute_testing_ratio


def flat_pair(tree, p=2.0):
    one = SimpleFunction.constant(tree, 1.0)
    return WeightPair(one, one, p)


class TestDualWeight:
    def test_flat(self):
        tree = build_uniform_dyadic(2)
        v = SimpleFunction.constant(tree, 1.0)
        assert np.allclose(dual_weight(v, 3.0).values, 1.0)

    def test_p2_is_reciprocal(self, rng):
        tree = build_random_tree(0, 4, 3)
        v = random_function(rng, tree)
        assert np.allclose(dual_weight(v, 2.0).values, 1.0 / v.values, rtol=1e-14)

    def test_power_law_pointwise(self):
        # v(w) = (1-a)**(1-p) w**(a(p-1)) has dual (1-a) w**(-a)
        alpha, p = 0.5, 3.0
        tree = build_uniform_dyadic(3)
        w = np.linspace(0.1, 1.0, tree.n_leaves)
        v = SimpleFunction(tree, (1 - alpha) ** (1 - p) * w ** (alpha * (p - 1)))
        sigma = dual_weight(v, p)
        assert np.allclose(sigma.values, (1 - alpha) * w**-alpha, rtol=1e-12)

    def test_involution_at_p2(self, rng):
        tree = build_random_tree(1, 4, 3)
        v = random_function(rng, tree)
        back = dual_weight(dual_weight(v, 2.0), 2.0)
        assert np.allclose(back.values, v.values, rtol=1e-12)

    def test_errors(self):
        tree = build_uniform_dyadic(1)
        with pytest.raises(ValueError):
            dual_weight(SimpleFunction(tree, [0.0, 1.0]), 2.0)
        with pytest.raises(ValueError):
            dual_weight(SimpleFunction.constant(tree, 1.0), 1.0)


class TestWeightedNorm:
    def test_probability_space(self):
        tree = build_uniform_dyadic(2)
        one = SimpleFunction.constant(tree, 1.0)
        assert weighted_lp_norm(one, one, 3.7) == pytest.approx(1.0, abs=1e-14)

    def test_indicator_norm(self):
        tree = build_uniform_dyadic(2)
        node = tree.children[tree.root][0]
        f = SimpleFunction.indicator(tree, node)
        one = SimpleFunction.constant(tree, 1.0)
        for p in (1.0, 2.0, 3.5):
            assert weighted_lp_norm(f, one, p) == pytest.approx(
                0.5 ** (1 / p), rel=1e-13
            )

    def test_against_brute_force(self, rng):
        tree = build_random_tree(2, 5, 3)
        f = random_function(rng, tree, signed=True)
        w = random_function(rng, tree)
        p = 2.6
        brute = sum(
            abs(f.values[i]) ** p * w.values[i] * tree.leaf_mass[i]
            for i in range(tree.n_leaves)
        ) ** (1 / p)
        assert weighted_lp_norm(f, w, p) == pytest.approx(brute, rel=1e-12)


class TestWeightPair:
    def test_sigma_derived(self, rng):
        tree = build_random_tree(3, 4, 3)
        pair = random_weight_pair(rng, tree, 2.5)
        assert np.allclose(
            pair.sigma.values, pair.v.values ** (1 - 2.5 / 1.5), rtol=1e-12
        )

    def test_rejects_nonpositive(self):
        tree = build_uniform_dyadic(1)
        bad = SimpleFunction(tree, [1.0, 0.0])
        good = SimpleFunction.constant(tree, 1.0)
        with pytest.raises(ValueError):
            WeightPair(bad, good, 2.0)
        with pytest.raises(ValueError):
            WeightPair(good, bad, 2.0)


class TestTestingConstant:
    @pytest.mark.parametrize("depth", [0, 1, 2, 3])
    def test_flat_weights_give_one(self, depth):
        tree = build_uniform_dyadic(depth)
        L, witness = get_testing_constant(flat_pair(tree), 0.0, 2.0)
        assert L == pytest.approx(1.0, rel=1e-12)
        ratios = get_testing_ratios(flat_pair(tree), 0.0, 2.0)
        assert np.allclose(ratios, 1.0, rtol=1e-12)

    def test_against_global_operator_oracle(self, rng):
        for seed in range(8):
            tree, pair, exps = random_instance(seed, max_depth=4, max_branch=3)
            ratios = get_testing_ratios(pair, exps.alpha, exps.q)
            for node in range(tree.n_nodes):
                oracle = brute_testing_ratio(pair, node, exps.alpha, exps.q)
                assert ratios[node] == pytest.approx(oracle, rel=1e-11)

    def test_scaling_in_u(self, rng):
        tree, pair, exps = random_instance(5)
        c = 3.7
        scaled = WeightPair(
            pair.u.with_values(c * pair.u.values), pair.v, pair.p
        )
        L1, _ = get_testing_constant(pair, exps.alpha, exps.q)
        L2, _ = get_testing_constant(scaled, exps.alpha, exps.q)
        assert L2 == pytest.approx(c ** (1 / exps.q) * L1, rel=1e-10)

    def test_scaling_in_v(self, rng):
        # replacing v by c*v rescales sigma by c**(1-p') and L by c**(-1/p)
        tree, pair, exps = random_instance(6)
        c = 2.19
        scaled = WeightPair(
            pair.u, pair.v.with_values(c * pair.v.values), pair.p
        )
        p_prime = pair.p / (pair.p - 1)
        assert np.allclose(
            scaled.sigma.values, c ** (1 - p_prime) * pair.sigma.values, rtol=1e-12
        )
        L1, _ = get_testing_constant(pair, exps.alpha, exps.q)
        L2, _ = get_testing_constant(scaled, exps.alpha, exps.q)
        assert L2 == pytest.approx(c ** (-1 / pair.p) * L1, rel=1e-10)

    def test_witness_attains_max(self, rng):
        tree, pair, exps = random_instance(7)
        L, witness = get_testing_constant(pair, exps.alpha, exps.q)
        ratios = get_testing_ratios(pair, exps.alpha, exps.q)
        assert ratios[witness] == L


class TestCarleson:
    def test_root_mass_sequence(self, rng):
        tree = build_random_tree(4, 4, 3)
        pair = random_weight_pair(rng, tree, 2.0)
        p, q = 2.0, 3.0
        sig_total = node_integrals(pair.sigma)[tree.root]
        a = np.zeros(tree.n_nodes)
        a[tree.root] = sig_total ** (q / p)
        assert carleson_constant(
            CarlesonSequence(tree, a), pair.sigma, p, q
        ) == pytest.approx(1.0, rel=1e-12)

    def test_zero_sequence(self):
        tree = build_uniform_dyadic(2)
        seq = CarlesonSequence(tree, np.zeros(tree.n_nodes))
        sigma = SimpleFunction.constant(tree, 1.0)
        assert carleson_constant(seq, sigma, 2.0, 2.0) == 0.0

    def test_negative_rejected(self):
        tree = build_uniform_dyadic(1)
        with pytest.raises(ValueError):
            CarlesonSequence(tree, np.array([1.0, -0.1, 0.0]))

    def test_normalization_helper(self, rng):
        for seed in range(10):
            tree, pair, exps = random_instance(seed, max_depth=5)
            gen = np.random.default_rng(seed)
            seq = random_carleson_sequence(gen, pair, exps.p, exps.q)
            c = carleson_constant(seq, pair.sigma, exps.p, exps.q)
            assert c == pytest.approx(1.0, rel=1e-10)


class TestCarlesonFromLinearization:
    def test_single_node_tree(self):
        tree = build_uniform_dyadic(0)
        pair = WeightPair(
            SimpleFunction(tree, [1.7]), SimpleFunction(tree, [0.6]), 2.0
        )
        f = SimpleFunction(tree, [1.0])
        seq = carleson_from_linearization(pair, f, 0.0, 2.0)
        sigma_avg = pair.sigma.values[0]
        assert seq.a[tree.root] == pytest.approx(
            sigma_avg**2 * pair.u.values[0], rel=1e-13
        )

    def test_flat_depth_one(self):
        tree = build_uniform_dyadic(1)
        pair = flat_pair(tree)
        f = SimpleFunction.constant(tree, 1.0)
        seq = carleson_from_linearization(pair, f, 0.0, 2.0)
        expect = np.zeros(tree.n_nodes)
        expect[tree.root] = 1.0
        assert np.allclose(seq.a, expect, atol=1e-14)

    def test_reproduces_operator_integral(self, rng):
        # summing a_Q times the q-power of the sigma-average of f over Q
        # equals the u-integral of the maximal function of f*sigma
        for seed in range(6):
            tree, pair, exps = random_instance(seed, max_depth=5)
            f = random_function(np.random.default_rng(seed + 50), tree)
            alpha, q = exps.alpha, exps.q
            seq = carleson_from_linearization(pair, f, alpha, q)
            g = f.with_values(f.values * pair.sigma.values)
            M = frac_maximal(g, alpha)
            direct = float(
                (M.values**q * pair.u.values * tree.leaf_mass).sum()
            )
            sig_leaf = pair.sigma.values * tree.leaf_mass
            total = 0.0
            for node in range(tree.n_nodes):
                if seq.a[node] == 0.0:
                    continue
                sl = tree.leaf_slice(node)
                wavg = float(
                    (f.values[sl] * sig_leaf[sl]).sum() / sig_leaf[sl].sum()
                )
                total += seq.a[node] * wavg**q
            assert total == pytest.approx(direct, rel=1e-11)

    def test_subtree_sums_bounded_by_testing_constant(self, rng):
        for seed in range(8):
            tree, pair, exps = random_instance(seed, max_depth=5)
            f = random_function(np.random.default_rng(seed + 60), tree)
            seq = carleson_from_linearization(pair, f, exps.alpha, exps.q)
            L, _ = get_testing_constant(pair, exps.alpha, exps.q)
            sums = seq.subtree_sums()
            sig = node_integrals(pair.sigma)
            lhs = sums ** (1 / exps.q)
            rhs = L * sig ** (1 / exps.p)
            assert np.all(lhs <= rhs * (1 + 1e-9) + 1e-12)


class TestEmbedding:
    def test_constant_function_root_sequence(self, rng):
        tree = build_random_tree(8, 4, 3)
        pair = random_weight_pair(rng, tree, 2.0)
        p, q = 2.0, 2.0
        sig_total = node_integrals(pair.sigma)[tree.root]
        a = np.zeros(tree.n_nodes)
        a[tree.root] = sig_total ** (q / p)
        seq = CarlesonSequence(tree, a)
        phi = SimpleFunction.constant(tree, 1.0)
        lhs, rhs, ratio = embedding_check(seq, phi, pair.sigma, p, q)
        assert lhs == pytest.approx(sig_total ** (1 / p), rel=1e-12)
        assert rhs == pytest.approx(cpq(p, q) * sig_total ** (1 / p), rel=1e-12)
        assert ratio <= 1.0

    def test_uses_c22_equal_2(self):
        tree = build_uniform_dyadic(1)
        pair = flat_pair(tree)
        a = np.zeros(tree.n_nodes)
        a[tree.root] = 1.0
        lhs, rhs, _ = embedding_check(
            CarlesonSequence(tree, a),
            SimpleFunction.constant(tree, 1.0),
            pair.sigma,
            2.0,
            2.0,
        )
        assert rhs == pytest.approx(2.0 * lhs, rel=1e-13)

    def test_indicators_on_small_trees(self):
        # exhaustive indicator check on every node of small dyadic trees
        for depth in (1, 2, 3):
            tree = build_uniform_dyadic(depth)
            pair = flat_pair(tree)
            p, q = 2.0, 2.5
            rng = np.random.default_rng(depth)
            seq = random_carleson_sequence(rng, pair, p, q)
            for node in range(tree.n_nodes):
                phi = SimpleFunction.indicator(tree, node)
                lhs, rhs, ratio = embedding_check(seq, phi, pair.sigma, p, q)
                assert lhs <= rhs * (1 + 1e-9)

    def test_violating_sequence_rejected(self):
        tree = build_uniform_dyadic(1)
        pair = flat_pair(tree)
        a = np.zeros(tree.n_nodes)
        a[tree.root] = 100.0
        with pytest.raises(ValueError):
            embedding_check(
                CarlesonSequence(tree, a),
                SimpleFunction.constant(tree, 1.0),
                pair.sigma,
                2.0,
                2.0,
            )


class TestMainInequality:
    def test_zero_function(self):
        tree = build_uniform_dyadic(2)
        pair = flat_pair(tree)
        lhs, rhs, ratio = main_inequality_check(
            pair, SimpleFunction.constant(tree, 0.0), 0.0, 2.0
        )
        assert lhs == 0.0
        assert ratio == 0.0

    def test_unit_function_flat_weights(self):
        tree = build_uniform_dyadic(2)
        pair = flat_pair(tree)
        lhs, rhs, ratio = main_inequality_check(
            pair, SimpleFunction.constant(tree, 1.0), 0.0, 2.0
        )
        assert lhs == pytest.approx(1.0, rel=1e-13)
        assert rhs == pytest.approx(2.0, rel=1e-12)
        assert ratio == pytest.approx(0.5, rel=1e-12)

    def test_fuzz_ratio_below_one(self, rng):
        for seed in range(25):
            tree, pair, exps = random_instance(seed)
            gen = np.random.default_rng(seed + 99)
            for k in range(4):
                f = random_function(gen, tree, signed=(k % 2 == 0))
                _, _, ratio = main_inequality_check(pair, f, exps.alpha, exps.q)
                assert ratio <= 1.0 + 1e-9


class TestOperatorNormLower:
    def test_single_leaf_closed_form(self):
        tree = build_uniform_dyadic(0)
        u, v = 1.9, 0.7
        pair = WeightPair(
            SimpleFunction(tree, [u]), SimpleFunction(tree, [v]), 2.0
        )
        q = 3.0
        ratio, witness = operator_norm_lower(pair, 0.5, q, budget=10)
        assert ratio == pytest.approx(u ** (1 / q) / v ** (1 / 2.0), rel=1e-12)

    def test_never_exceeds_bound(self):
        for seed in range(6):
            tree, pair, exps = random_instance(seed, max_depth=4)
            L, _ = get_testing_constant(pair, exps.alpha, exps.q)
            ratio, _ = operator_norm_lower(
                pair, exps.alpha, exps.q, budget=150, seed=seed
            )
            assert ratio <= cpq(exps.p, exps.q) * L + 1e-9

    def test_monotone_in_budget(self):
        tree, pair, exps = random_instance(3, max_depth=4)
        r1, _ = operator_norm_lower(pair, exps.alpha, exps.q, budget=40, seed=1)
        r2, _ = operator_norm_lower(pair, exps.alpha, exps.q, budget=160, seed=1)
        r3, _ = operator_norm_lower(pair, exps.alpha, exps.q, budget=400, seed=1)
        assert r1 <= r2 <= r3

    def test_witness_consistency(self):
        tree, pair, exps = random_instance(4, max_depth=4)
        ratio, witness = operator_norm_lower(
            pair, exps.alpha, exps.q, budget=120, seed=0
        )
        lhs = weighted_lp_norm(frac_maximal(witness, exps.alpha), pair.u, exps.q)
        rhs = weighted_lp_norm(witness, pair.v, exps.p)
        assert lhs / rhs == pytest.approx(ratio, rel=1e-12)


class TestCaseSerialization:
    def test_dump_and_load(self, tmp_path, rng):
        tree, pair, exps = random_instance(11, max_depth=4)
        f = random_function(rng, tree)
        path = tmp_path / "case.json"
        dump_case(path, tree, pair, f, 11, exps)
        tree2, pair2, f2, exps2 = load_case(path)
        assert np.allclose(tree2.mass, tree.mass)
        assert np.allclose(pair2.u.values, pair.u.values)
        assert np.allclose(f2.values, f.values)
        assert exps2.p == pytest.approx(exps.p)
        lhs1 = main_inequality_check(pair, f, exps.alpha, exps.q)
        lhs2 = main_inequality_check(pair2, f2, exps2.alpha, exps2.q)
        assert lhs1[0] == pytest.approx(lhs2[0], rel=1e-12)
