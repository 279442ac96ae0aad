#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
field_algebra —— 有限矩阵代数恒等式的精确验证（sympy，全程无浮点）

度规 g = diag(−1, 1, 1, 1)。

  - Majorana 表示：γ^μ 纯虚，½{γ^μ, γ^ν} = −g^{μν}；γ⁰ 反对称，γ¹ γ² γ³ 对称，
    γ⁵ = γ⁰γ¹γ²γ³ 实反对称，五个矩阵的对称性普查为 (3, 2)。
  - Bose 障碍：与 γ¹ γ² γ³ 反对易、与 γ⁰ 对易的矩阵只能是 γ⁰ 的倍数（反对称），
    要求对称时方程组只有零解。
  - Kemmer–Duffin：标量–矢量 5 维（rank β⁰ = 2）与矢量–张量 10 维（rank β⁰ = 6），
    β^μβ^σβ^ν + β^νβ^σβ^μ + g^{μσ}β^ν + g^{νσ}β^μ = 0。
"""

from dataclasses import dataclass, field
from itertools import permutations, product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import sympy as sp

from engine.utils.errors import ClassificationError, InvalidArgumentError
from engine.utils.logger import get_component_logger

log = get_component_logger("field_algebra", "algebra")

METRIC = sp.ImmutableMatrix(sp.diag(-1, 1, 1, 1))

_SIGMA1 = sp.Matrix([[0, 1], [1, 0]])
_SIGMA3 = sp.Matrix([[1, 0], [0, -1]])
_EPS = sp.Matrix([[0, 1], [-1, 0]])
_I2 = sp.eye(2)

# 10 维表示中反对称张量分量的下标对
_PAIRS: Tuple[Tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


@dataclass(frozen=True)
class AlgebraRep:
    name: str
    matrices: Tuple[sp.ImmutableMatrix, ...]
    labels: Tuple[str, ...] = ()
    metric: sp.ImmutableMatrix = field(default=METRIC)

    def __post_init__(self):
        mats = tuple(sp.ImmutableMatrix(m) for m in self.matrices)
        if not mats:
            raise InvalidArgumentError("representation needs at least one matrix")
        dim = mats[0].shape[0]
        for m in mats:
            if m.shape != (dim, dim):
                raise InvalidArgumentError("matrices must be square and of equal dimension", {"shape": list(m.shape)})
            if any(entry.is_Float for entry in m.atoms(sp.Float)):
                raise InvalidArgumentError("entries must be exact", {"name": self.name})
        object.__setattr__(self, "matrices", mats)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(len(mats))))

    @property
    def dimension(self) -> int:
        return self.matrices[0].shape[0]

    def __getitem__(self, idx: int) -> sp.ImmutableMatrix:
        return self.matrices[idx]


def _kron(a: sp.Matrix, b: sp.Matrix) -> sp.Matrix:
    return sp.kronecker_product(a, b)


def _is_zero(m: sp.MatrixBase) -> bool:
    return all(sp.simplify(e) == 0 for e in m)


# ── Majorana 表示与普查 ────────────────────────────────────────────────────
def build_majorana_gammas() -> AlgebraRep:
    """四个 γ^μ 加 γ⁵，共五个矩阵。"""
    i = sp.I
    g0 = i * _kron(_EPS, _I2)
    g1 = i * _kron(_SIGMA3, _I2)
    g2 = i * _kron(_SIGMA1, _SIGMA3)
    g3 = i * _kron(_SIGMA1, _SIGMA1)
    g5 = (g0 * g1 * g2 * g3).applyfunc(sp.expand)
    return AlgebraRep("majorana", (g0, g1, g2, g3, g5), ("gamma0", "gamma1", "gamma2", "gamma3", "gamma5"))


def clifford_failures(rep: AlgebraRep) -> List[Tuple[int, int]]:
    """½{γ^μ, γ^ν} + g^{μν} ≠ 0 的下标对。"""
    dim = rep.dimension
    bad = []
    for mu in range(4):
        for nu in range(mu, 4):
            anti = (rep[mu] * rep[nu] + rep[nu] * rep[mu]) / 2 + rep.metric[mu, nu] * sp.eye(dim)
            if not _is_zero(anti):
                bad.append((mu, nu))
    return bad


def symmetry_census(rep: AlgebraRep) -> Tuple[int, int]:
    n_sym = n_anti = 0
    for label, m in zip(rep.labels, rep.matrices):
        if _is_zero(m - m.T):
            n_sym += 1
        elif _is_zero(m + m.T):
            n_anti += 1
        else:
            raise ClassificationError("matrix is neither symmetric nor antisymmetric", {"matrix": label})
    return n_sym, n_anti


def conjugate_rep(rep: AlgebraRep, O: sp.Matrix) -> AlgebraRep:
    """O·M·O⁻¹ 作用于每个矩阵；O 正交时普查不变。"""
    O = sp.Matrix(O)
    inv = O.inv()
    return AlgebraRep(rep.name + "_conj", tuple((O * m * inv).applyfunc(sp.expand) for m in rep.matrices), rep.labels, rep.metric)


def permutation_matrix(order: Sequence[int]) -> sp.Matrix:
    n = len(order)
    P = sp.zeros(n, n)
    for row, col in enumerate(order):
        P[row, col] = 1
    return P


# ── Bose 障碍 ─────────────────────────────────────────────────────────────
def _unknown(dim: int, symmetry: str) -> Tuple[sp.Matrix, List[sp.Symbol]]:
    """symmetric / antisymmetric 时直接按对称性参数化，未知数只取上三角。"""
    if symmetry not in ("", "symmetric", "antisymmetric"):
        raise InvalidArgumentError(f"unknown symmetry '{symmetry}'", {"symmetry": symmetry})
    if not symmetry:
        syms = list(sp.symbols(f"x0:{dim * dim}"))
        return sp.Matrix(dim, dim, syms), syms
    X = sp.zeros(dim, dim)
    syms = []
    sign = 1 if symmetry == "symmetric" else -1
    for a in range(dim):
        for b in range(a if symmetry == "symmetric" else a + 1, dim):
            s = sp.Symbol(f"x{a}_{b}")
            syms.append(s)
            X[a, b] = s
            X[b, a] = sign * s
    return X, syms


def _constraint_system(gammas: Sequence[sp.Matrix], commute_with: Optional[sp.Matrix], symmetry: Optional[str]):
    dim = (gammas[0] if gammas else commute_with).shape[0]
    X, syms = _unknown(dim, symmetry or "")
    eqs = []
    for g in gammas:
        eqs.extend(list(X * g + g * X))
    if commute_with is not None:
        eqs.extend(list(X * commute_with - commute_with * X))
    A, _ = sp.linear_eq_to_matrix([sp.expand(e) for e in eqs], syms)
    return A, X, syms


def _nullity(A: sp.Matrix, syms: Sequence[sp.Symbol]) -> int:
    return len(syms) - int(A.rank())


def _symmetric_basis(dim: int) -> List[Tuple[Tuple[int, int], sp.Matrix]]:
    basis = []
    for a in range(dim):
        for b in range(a, dim):
            E = sp.zeros(dim, dim)
            E[a, b] = 1
            E[b, a] = 1
            basis.append(((a, b), E))
    return basis


def _as_strings(m: sp.MatrixBase) -> List[List[str]]:
    return [[str(e) for e in row] for row in m.tolist()]


def _bose_witnesses(g0: sp.Matrix, spatial: Sequence[sp.Matrix]) -> List[Dict[str, Any]]:
    """与 γ⁰ 对易的对称 β 的每个基向量，给出第一个不为零的 {β, γᵏ}。"""
    A, X, syms = _constraint_system([], g0, "symmetric")
    witnesses = []
    for vec in A.nullspace():
        beta = X.subs(dict(zip(syms, vec))).applyfunc(sp.expand)
        for k, g in enumerate(spatial, start=1):
            anti = (beta * g + g * beta).applyfunc(sp.expand)
            if not _is_zero(anti):
                witnesses.append({"beta": _as_strings(beta), "k": k, "anticommutator": _as_strings(anti)})
                break
    return witnesses


def check_bose_obstruction(rep: Optional[AlgebraRep] = None) -> Dict[str, Any]:
    """
    在 Majorana 表示里解 {X, γᵏ} = 0、[X, γ⁰] = 0：
      X 对称（Bose 指派）→ 只有零解，矛盾；X 反对称（Fermi 指派）→ 一维解 γ⁰。
    证书列出每个对称基矩阵违反的是哪一个关系；witnesses 对与 γ⁰ 对易的
    每个对称 β 给出具体不为零的反对易子 {β, γᵏ}。
    """
    rep = rep or build_majorana_gammas()
    g0, spatial = rep[0], [rep[1], rep[2], rep[3]]
    dim = rep.dimension

    A_any, _, syms_any = _constraint_system(spatial, None, None)
    anticommutant_dim = _nullity(A_any, syms_any)

    A_bose, _, syms_bose = _constraint_system(spatial, g0, "symmetric")
    bose_nullity = _nullity(A_bose, syms_bose)
    A_fermi, _, syms_fermi = _constraint_system(spatial, g0, "antisymmetric")
    fermi_nullity = _nullity(A_fermi, syms_fermi)

    certificate = []
    for (a, b), E in _symmetric_basis(dim):
        failing = [k + 1 for k, g in enumerate(spatial) if not _is_zero(E * g + g * E)]
        if _is_zero(E * g0 - g0 * E) is False:
            failing.append(0)
        certificate.append({"basis": [a, b], "violated": failing})

    witnesses = _bose_witnesses(g0, spatial) if bose_nullity == 0 else []
    report = {
        "dimension": dim,
        "anticommutant_dim": anticommutant_dim,
        "bose_rank": int(A_bose.rank()),
        "bose_nullity": bose_nullity,
        "fermi_nullity": fermi_nullity,
        "contradiction": bose_nullity == 0,
        "fermi_consistent": fermi_nullity > 0,
        "certificate": certificate,
        "witnesses": witnesses,
    }
    log.info(
        "bose obstruction checked",
        extra={"payload": {k: v for k, v in report.items() if k not in ("certificate", "witnesses")}},
    )
    return report


def check_two_dimensional_census() -> Dict[str, Any]:
    """2×2 中 iε, iσ3, iσ1 已两两反对易，不存在第四个反对易元，普查无从谈起。"""
    i = sp.I
    gens = [i * _EPS, i * _SIGMA3, i * _SIGMA1]
    A, _, syms = _constraint_system(gens, None, None)
    anticommutant_dim = _nullity(A, syms)
    return {"dimension": 2, "anticommutant_dim": anticommutant_dim, "census_possible": anticommutant_dim > 0}


# ── Kemmer–Duffin ─────────────────────────────────────────────────────────
def _h(mu: int) -> int:
    return -int(METRIC[mu, mu])


def build_kemmer_duffin(spin: int) -> AlgebraRep:
    if spin == 0:
        dim = 5
        mats = []
        for mu in range(4):
            B = sp.zeros(dim, dim)
            B[0, 1 + mu] = 1
            B[1 + mu, 0] = _h(mu)
            mats.append(B)
        return AlgebraRep("kemmer_duffin_spin0", tuple(mats), ("beta0", "beta1", "beta2", "beta3"))
    if spin == 1:
        dim = 10
        pair_index = {p: 4 + n for n, p in enumerate(_PAIRS)}
        mats = []
        for mu in range(4):
            B = sp.zeros(dim, dim)
            # 矢量 → 张量：β^μ e_a = f_{μa}
            for a in range(4):
                if a == mu:
                    continue
                sign = 1 if mu < a else -1
                B[pair_index[tuple(sorted((mu, a)))], a] = sign
            # 张量 → 矢量：β^μ f_{ab} = h_μ(δ_{μa} e_b − δ_{μb} e_a)
            for (a, b), col in pair_index.items():
                if mu == a:
                    B[b, col] += _h(mu)
                if mu == b:
                    B[a, col] -= _h(mu)
            mats.append(B)
        return AlgebraRep("kemmer_duffin_spin1", tuple(mats), ("beta0", "beta1", "beta2", "beta3"))
    raise InvalidArgumentError("Kemmer-Duffin representation needs spin 0 or 1", {"spin": spin})


def trilinear_failures(rep: AlgebraRep) -> List[Tuple[int, int, int]]:
    bad = []
    for mu, sigma, nu in product(range(4), repeat=3):
        lhs = rep[mu] * rep[sigma] * rep[nu] + rep[nu] * rep[sigma] * rep[mu]
        lhs += rep.metric[mu, sigma] * rep[nu] + rep.metric[nu, sigma] * rep[mu]
        if not _is_zero(lhs):
            bad.append((mu, sigma, nu))
    return bad


def symmetrized_cubic_failures(rep: AlgebraRep) -> List[Tuple[int, int, int]]:
    """对 (μ,σ,ν) 的全部置换求和 β^aβ^bβ^c + g^{ab}β^c，应为零。"""
    bad = []
    dim = rep.dimension
    for idx in product(range(4), repeat=3):
        total = sp.zeros(dim, dim)
        for a, b, c in permutations(idx):
            total += rep[a] * rep[b] * rep[c] + rep.metric[a, b] * rep[c]
        if not _is_zero(total):
            bad.append(idx)
    return bad


def beta_ranks(rep: AlgebraRep) -> Dict[str, Any]:
    return {
        "dimension": rep.dimension,
        "rank_beta0": int(rep[0].rank()),
        "determinants": [str(m.det()) for m in rep.matrices],
        "all_singular": all(m.det() == 0 for m in rep.matrices),
    }


# ── 运动方程的极小多项式与 Lorentz 协变 ────────────────────────────────────
def _as_momentum(p: Sequence) -> sp.Matrix:
    if len(p) != 4:
        raise InvalidArgumentError("four-momentum needs four components", {"p": [str(x) for x in p]})
    return sp.Matrix([sp.nsimplify(x, rational=True) for x in p])


def momentum_square(p: Sequence) -> sp.Expr:
    """p² = g^{μν} p_μ p_ν（下指标分量）。"""
    pv = _as_momentum(p)
    return sp.expand((pv.T * METRIC * pv)[0, 0])


def contract(rep: AlgebraRep, p: Sequence) -> sp.Matrix:
    """M(p) = β^μ p_μ。"""
    pv = _as_momentum(p)
    M = sp.zeros(rep.dimension, rep.dimension)
    for mu in range(4):
        M += pv[mu] * rep[mu]
    return M


def klein_gordon_consistency(rep: AlgebraRep, samples: Sequence[Sequence]) -> Dict[str, Any]:
    """M³ + p²M 在每个样本上的最大残差；精确算术下必须为 0。"""
    residuals = []
    for p in samples:
        M = contract(rep, p)
        R = (M**3 + momentum_square(p) * M).applyfunc(sp.simplify)
        residuals.append(max((abs(e) for e in R), default=sp.Integer(0)))
    worst = max(residuals, default=sp.Integer(0))
    return {"max_residual": str(worst), "exact_zero": worst == 0, "samples": len(residuals)}


def boost_x(cosh: sp.Rational = sp.Rational(5, 4), sinh: sp.Rational = sp.Rational(3, 4)) -> sp.Matrix:
    """作用于上指标分量的 x 方向有理 boost，要求 cosh² − sinh² = 1。"""
    if sp.simplify(cosh**2 - sinh**2 - 1) != 0:
        raise InvalidArgumentError("boost parameters must satisfy cosh^2 - sinh^2 = 1", {"cosh": str(cosh), "sinh": str(sinh)})
    L = sp.eye(4)
    L[0, 0] = L[1, 1] = cosh
    L[0, 1] = L[1, 0] = sinh
    return L


def lorentz_covariance_check(rep: AlgebraRep, boost: sp.Matrix, p: Sequence) -> Dict[str, Any]:
    """
    标量–矢量表示上 L = 1 ⊕ Λ：L·M(p)·L⁻¹ = M(Λp)，p 为下指标分量。
    p² 的不变性对任意表示都检查。
    """
    pv = _as_momentum(p)
    p_up = METRIC * pv
    p_boost = METRIC * (boost * p_up)
    invariant = sp.simplify(momentum_square(list(pv)) - momentum_square(list(p_boost))) == 0
    out: Dict[str, Any] = {"p_square_invariant": bool(invariant), "p_boosted": [str(x) for x in p_boost]}
    if rep.dimension == 5:
        L = sp.diag(1, boost)
        lhs = L * contract(rep, list(pv)) * L.inv()
        out["covariant"] = _is_zero(lhs - contract(rep, list(p_boost)))
    return out


# ── Dirac–Majorana 耦合 ───────────────────────────────────────────────────
def dirac_majorana_couplings(rep: Optional[AlgebraRep] = None) -> Dict[str, Any]:
    """β = γ⁰，α^μ = βγ^μ，A^μ = iα^μ；检查 A^{μ†} = −A^μ。"""
    rep = rep or build_majorana_gammas()
    beta = rep[0]
    alphas = [beta * rep[mu] for mu in range(4)]
    A = [sp.I * a for a in alphas]
    failures = [mu for mu, a in enumerate(A) if not _is_zero(a.H + a)]
    return {
        "beta_imaginary_antisymmetric": _is_zero(beta + beta.T) and _is_zero(beta + beta.conjugate()),
        "anti_hermitian_failures": failures,
        "ok": not failures,
    }


# ── 汇总报告 ──────────────────────────────────────────────────────────────
def verification_report() -> Dict[str, Any]:
    gammas = build_majorana_gammas()
    census = symmetry_census(gammas)
    swapped = conjugate_rep(gammas, permutation_matrix([1, 0, 3, 2]))
    kd0 = build_kemmer_duffin(0)
    kd1 = build_kemmer_duffin(1)
    samples = [(1, 0, 0, 0), (2, 1, -1, 3), (5, 3, 0, 4), (sp.Rational(1, 2), 0, sp.Rational(3, 2), -1)]

    def entry(ok: bool, offending: Any = None) -> Dict[str, Any]:
        return {"pass": bool(ok), "offending": offending or []}

    clifford_bad = clifford_failures(gammas)
    bose = check_bose_obstruction(gammas)
    two_d = check_two_dimensional_census()
    tri0, tri1 = trilinear_failures(kd0), trilinear_failures(kd1)
    sym0, sym1 = symmetrized_cubic_failures(kd0), symmetrized_cubic_failures(kd1)
    r0, r1 = beta_ranks(kd0), beta_ranks(kd1)
    kg0, kg1 = klein_gordon_consistency(kd0, samples), klein_gordon_consistency(kd1, samples)
    lorentz = lorentz_covariance_check(kd0, boost_x(), (2, 1, -1, 3))
    couplings = dirac_majorana_couplings(gammas)

    report = {
        "clifford": entry(not clifford_bad, [list(x) for x in clifford_bad]),
        "census": entry(census == (3, 2), list(census)),
        "census_basis_change": entry(symmetry_census(swapped) == (3, 2)),
        "bose_obstruction": entry(bose["contradiction"] and bose["fermi_consistent"]),
        "two_dimensional_census": entry(not two_d["census_possible"]),
        "kd0_trilinear": entry(not tri0, [list(x) for x in tri0]),
        "kd1_trilinear": entry(not tri1, [list(x) for x in tri1]),
        "kd0_symmetrized_cubic": entry(not sym0, [list(x) for x in sym0]),
        "kd1_symmetrized_cubic": entry(not sym1, [list(x) for x in sym1]),
        "kd0_rank": entry(r0["rank_beta0"] == 2 and r0["all_singular"], [r0["rank_beta0"]]),
        "kd1_rank": entry(r1["rank_beta0"] == 6 and r1["all_singular"], [r1["rank_beta0"]]),
        "kd0_klein_gordon": entry(kg0["exact_zero"]),
        "kd1_klein_gordon": entry(kg1["exact_zero"]),
        "lorentz_covariance": entry(lorentz.get("covariant", False) and lorentz["p_square_invariant"]),
        "anti_hermitian_couplings": entry(couplings["ok"], couplings["anti_hermitian_failures"]),
    }
    failed = [k for k, v in report.items() if not v["pass"]]
    if failed:
        log.warning("algebra identities failed", extra={"payload": {"failed": failed}})
    return report
