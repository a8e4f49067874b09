import pytest

from conftest import expr, prog, tiny_structure
from rgkit.formula import App, Lit, Quant
from rgkit.parser import parse_assertion
from rgkit.proofs import (Obligation, ProofNode, SchemaError,
                          check_proof_tree, discharge_obligation,
                          validate_rule_instance)
from rgkit.removal import Removal
from rgkit.satcheck import Specification, SpecifiedProgram
from rgkit.sorts import Structure, nat_sort


def mk_spec(st, glo, aux=(), pre="true", rely="I", wait="false", guar="true",
            eff="true"):
    scope = tuple(glo) + tuple(aux)
    parse = lambda s: expr(s, st, scope)
    return Specification(tuple(glo), tuple(aux), parse(pre), parse(rely),
                         parse(wait), parse(guar), parse(eff))


class TestRuleSchemas:
    def setup_method(self):
        self.st = tiny_structure(x=("nat", 0, 3), b="bool")

    def test_skip_axiom_no_obligations(self):
        s = mk_spec(self.st, ("x",), rely="x = x~", guar="x >= x~",
                    eff="x = x~")
        sp = SpecifiedProgram(prog("skip"), s)
        assert validate_rule_instance("skip", [], sp, self.st) == []

    def test_skip_rejects_eff_other_than_rely(self):
        s = mk_spec(self.st, ("x",), rely="x = x~", eff="true")
        sp = SpecifiedProgram(prog("skip"), s)
        with pytest.raises(SchemaError):
            validate_rule_instance("skip", [], sp, self.st)

    def test_assignment_discharges_over_carrier(self):
        s = mk_spec(self.st, ("x",), rely="I",
                    guar="x = x~ + 1 \\/ x = x~",
                    eff="I | (x = x~ + 1) | I")
        sp = SpecifiedProgram(prog("x := x + 1"), s)
        obs = validate_rule_instance("assignment", [], sp, self.st)
        assert len(obs) == 1
        assert discharge_obligation(obs[0], self.st)

    def test_assignment_obligation_can_fail(self):
        s = mk_spec(self.st, ("x",), rely="I", guar="x = x~",
                    eff="I | (x = x~ + 1) | I")
        sp = SpecifiedProgram(prog("x := x + 1"), s)
        [ob] = validate_rule_instance("assignment", [], sp, self.st)
        assert not discharge_obligation(ob, self.st)

    def test_assignment_update_side_condition(self):
        st = tiny_structure(x=("nat", 0, 3), a=("nat", 0, 3), c=("nat", 0, 3))
        s = mk_spec(st, ("x",), aux=("a", "c"), rely="I",
                    eff="I | (x = x~ + 1) | I")
        sp = SpecifiedProgram(prog("x := x + 1"), s)
        with pytest.raises(SchemaError):
            validate_rule_instance("assignment", [], sp, st,
                                   updates={"a": expr("c + 1", st)})
        obs = validate_rule_instance("assignment", [], sp, st,
                                     updates={"a": expr("x", st)})
        assert len(obs) == 1

    def test_consequence_identical_specs_are_tautologies(self):
        s = mk_spec(self.st, ("x",), rely="x = x~", guar="x >= x~",
                    eff="x = x~")
        sp = SpecifiedProgram(prog("skip"), s)
        obs = validate_rule_instance("consequence", [sp], sp, self.st)
        assert len(obs) == 5
        assert all(discharge_obligation(o, self.st) for o in obs)

    def test_obligations_stay_inside_scope(self):
        st = tiny_structure(x=("nat", 0, 3), a=("nat", 0, 3))
        s = mk_spec(st, ("x",), aux=("a",), rely="I",
                    eff="I | (x = x~ + 1) | I")
        sp = SpecifiedProgram(prog("x := x + 1"), s)
        from rgkit.formula import free_names
        for ob in validate_rule_instance("assignment", [], sp, st,
                                         updates={"a": expr("x", st)}):
            assert free_names(ob.body) <= set(s.scope)

    def test_pre_rule(self):
        s1 = mk_spec(self.st, ("x",), pre="x = 0", rely="x = x~", eff="x = x~")
        s2 = mk_spec(self.st, ("x",), pre="x = 0", rely="x = x~",
                     eff="old(x = 0) /\\ x = x~")
        p = SpecifiedProgram(prog("skip"), s1)
        c = SpecifiedProgram(prog("skip"), s2)
        assert validate_rule_instance("pre", [p], c, self.st) == []

    def test_access_rule(self):
        z = prog("begin loc b; b := x = 0; while b do b := false od end")
        st = self.st
        s_weak = mk_spec(st, ("x",), rely="x >= x~")
        s_strong = mk_spec(st, ("x",), rely="x >= x~ /\\ x = x~")
        c = SpecifiedProgram(z, s_weak)
        p = SpecifiedProgram(z, s_strong)
        # b is local, x is in hid via nothing: x not in hid -> error
        with pytest.raises(SchemaError):
            validate_rule_instance("access", [p], c, st)
        z2 = prog("begin loc b; b := true; while b do x := x + 1; b := x < 2 od end")
        c2 = SpecifiedProgram(z2, s_weak)
        p2 = SpecifiedProgram(z2, s_strong)
        # here x occurs in a while test? it does not; use an explicit if
        z3 = prog("if x = 0 then skip else skip fi")
        c3 = SpecifiedProgram(z3, s_weak)
        p3 = SpecifiedProgram(z3, s_strong)
        assert validate_rule_instance("access", [p3], c3, st) == []

    def test_block_rule(self):
        st = tiny_structure(x=("nat", 0, 3), y=("nat", 0, 3))
        inner = mk_spec(st, ("x", "y"), rely="x = x~ /\\ y = y~")
        outer = mk_spec(st, ("x",), rely="x = x~")
        p = SpecifiedProgram(prog("y := 0"), inner)
        c = SpecifiedProgram(prog("begin loc y; y := 0 end"), outer)
        assert validate_rule_instance("block", [p], c, st) == []

    def test_sequential_rule(self):
        st = self.st
        mid = "x = 1"
        p1 = SpecifiedProgram(prog("x := 1"),
                              mk_spec(st, ("x",), rely="x = x~",
                                      eff=f"({mid}) /\\ x = 1"))
        p2 = SpecifiedProgram(prog("x := x + 1"),
                              mk_spec(st, ("x",), pre=mid, rely="x = x~",
                                      eff="x = x~ + 1"))
        c = SpecifiedProgram(prog("x := 1; x := x + 1"),
                             mk_spec(st, ("x",), rely="x = x~",
                                     eff="(x = 1) | (x = x~ + 1)"))
        assert validate_rule_instance("sequential", [p1, p2], c, st) == []

    def test_if_rule(self):
        st = self.st
        base = dict(rely="x = x~", eff="true")
        p1 = SpecifiedProgram(prog("skip"),
                              mk_spec(st, ("x",), pre="true /\\ x = 0", **base))
        p2 = SpecifiedProgram(prog("x := 0"),
                              mk_spec(st, ("x",),
                                      pre="true /\\ not (x = 0)", **base))
        c = SpecifiedProgram(prog("if x = 0 then skip else x := 0 fi"),
                             mk_spec(st, ("x",), pre="true", **base))
        assert validate_rule_instance("if", [p1, p2], c, st) == []

    def test_while_rule_emits_wf(self):
        st = self.st
        z_body = "x := x - 1"
        body_eff = "x < x~"
        p = SpecifiedProgram(
            prog(z_body),
            mk_spec(st, ("x",), pre="true /\\ x > 0", rely="x = x~",
                    eff=f"true /\\ ({body_eff})"))
        c = SpecifiedProgram(
            prog(f"while x > 0 do {z_body} od"),
            mk_spec(st, ("x",), pre="true", rely="x = x~",
                    eff=f"(closure({body_eff}) \\/ x = x~) /\\ not (x > 0)"))
        obs = validate_rule_instance("while", [p], c, st)
        assert [o.claim for o in obs] == ["wf"]
        assert discharge_obligation(obs[0], st)

    def test_lsps_while_drops_wf_but_needs_square(self):
        st = self.st
        p = SpecifiedProgram(
            prog("skip"),
            mk_spec(st, ("x",), pre="true /\\ b", rely="x = x~",
                    eff="true /\\ x = x~"), "square")
        c = SpecifiedProgram(
            prog("while b do skip od"),
            mk_spec(st, ("x",), rely="x = x~",
                    eff="(closure(x = x~) \\/ x = x~) /\\ not b"), "square")
        # b undeclared in glo: use a boolean in scope instead
        st2 = tiny_structure(x=("nat", 0, 3), b="bool")
        p = SpecifiedProgram(
            prog("skip"),
            mk_spec(st2, ("x", "b"), pre="true /\\ b",
                    rely="x = x~ /\\ (b <=> b~)",
                    eff="true /\\ x = x~"), "square")
        c = SpecifiedProgram(
            prog("while b do skip od"),
            mk_spec(st2, ("x", "b"), rely="x = x~ /\\ (b <=> b~)",
                    eff="(closure(x = x~) \\/ (x = x~ /\\ (b <=> b~)))"
                        " /\\ not b"), "square")
        assert validate_rule_instance("lsps-while", [p], c, st2) == []
        with pytest.raises(SchemaError):
            validate_rule_instance(
                "lsps-while", [SpecifiedProgram(p.program, p.spec, "curly")],
                SpecifiedProgram(c.program, c.spec, "curly"), st2)

    def test_parallel_rule(self):
        st = tiny_structure(x=("nat", 0, 3), y=("nat", 0, 3))
        shared = dict(pre="true")
        r1, r2 = "y = y~", "x = x~"
        g = "true"
        p1 = SpecifiedProgram(
            prog("x := 1"),
            mk_spec(st, ("x", "y"), rely=r1, wait="false \\/ false",
                    guar=f"({g}) /\\ ({r2})", eff="x = 1", **shared))
        p2 = SpecifiedProgram(
            prog("y := 1"),
            mk_spec(st, ("x", "y"), rely=r2, wait="false \\/ false",
                    guar=f"({g}) /\\ ({r1})", eff="y = 1", **shared))
        c = SpecifiedProgram(
            prog("{ x := 1 || y := 1 }"),
            mk_spec(st, ("x", "y"), rely=f"({r1}) /\\ ({r2})",
                    wait="false", guar=g, eff="(x = 1) /\\ (y = 1)",
                    **shared))
        obs = validate_rule_instance("parallel", [p1, p2], c, st)
        assert len(obs) == 1 and discharge_obligation(obs[0], st)

    def test_await_rule(self):
        st = tiny_structure(x=("nat", 0, 3), b="bool")
        scope = ("x", "b")
        pre = "true"
        rely = "x = x~ /\\ (b <=> b~)"
        body_pre = f"preserve({pre}, {rely}) /\\ b"
        p = SpecifiedProgram(
            prog("x := 1"),
            mk_spec(st, scope, pre=body_pre, rely="I", wait="false",
                    guar="true", eff="x = 1"))
        c = SpecifiedProgram(
            prog("await b do x := 1 od"),
            mk_spec(st, scope, pre=pre, rely=rely, wait="not b",
                    guar="true", eff=f"({rely}) | (x = 1) | ({rely})"))
        obs = validate_rule_instance("await", [p], c, st)
        assert len(obs) == 2
        assert all(discharge_obligation(o, st) for o in obs)

    def test_lsps_await_rule(self):
        st = tiny_structure(x=("nat", 0, 3), b="bool")
        scope = ("x", "b")
        rely = "x = x~ /\\ (b <=> b~)"
        body = SpecifiedProgram(
            prog("x := 1"),
            mk_spec(st, scope, pre=f"preserve(true, {rely}) /\\ b",
                    rely="I", wait="false", guar="true", eff="x = 1"),
            "curly")
        concl = SpecifiedProgram(
            prog("await b do x := 1 od"),
            mk_spec(st, scope, rely=rely, wait="not b", guar="true",
                    eff=f"({rely}) | (x = 1) | ({rely})"),
            "square")
        obs = validate_rule_instance("lsps-await", [body], concl, st)
        assert len(obs) == 2
        assert all(discharge_obligation(o, st) for o in obs)
        # curly conclusions must use the plain await rule
        with pytest.raises(SchemaError):
            validate_rule_instance(
                "lsps-await", [body],
                SpecifiedProgram(concl.program, concl.spec, "curly"), st)

    def test_elimination_rule(self):
        st = tiny_structure(x=("nat", 0, 3), a=("nat", 0, 3))
        p = SpecifiedProgram(
            prog("skip"),
            mk_spec(st, ("x",), aux=("a",), pre="a = 0",
                    rely="x = x~ /\\ a = a~", eff="x = x~"))
        sort = st.vars["a"]
        c_spec = Specification(
            ("x",), (),
            Quant("exists", (("a", False, sort),), p.spec.pre),
            Quant("forall", (("a", True, sort),),
                  Quant("exists", (("a", False, sort),), p.spec.rely)),
            p.spec.wait, p.spec.guar, p.spec.eff)
        c = SpecifiedProgram(prog("skip"), c_spec)
        assert validate_rule_instance("elimination", [p], c, st) == []

    def test_effect_global_auxiliary(self):
        st = tiny_structure(x=("nat", 0, 3), y=("nat", 0, 3))
        s = mk_spec(st, ("x",), rely="x = x~", guar="x >= x~", eff="x = x~")
        p = SpecifiedProgram(prog("skip"), s)
        c_eff = SpecifiedProgram(
            prog("skip"),
            mk_spec(st, ("x",), rely="x = x~", guar="x >= x~",
                    eff="x = x~ /\\ closure(x = x~ \\/ x >= x~)"))
        assert validate_rule_instance("effect", [p], c_eff, st) == []
        c_glob = SpecifiedProgram(
            prog("skip"),
            mk_spec(st, ("x", "y"), rely="x = x~",
                    guar="x >= x~ /\\ y = y~", eff="x = x~"))
        assert validate_rule_instance("global", [p], c_glob, st) == []
        c_aux = SpecifiedProgram(
            prog("skip"),
            mk_spec(st, ("x",), aux=("y",), rely="x = x~",
                    guar="x >= x~ /\\ y = y~", eff="x = x~"))
        assert validate_rule_instance("auxiliary", [p], c_aux, st) == []

    def test_introduction_rule(self):
        st = tiny_structure(x=("nat", 0, 3), a=("nat", 0, 3))
        aug = prog("await true do a := x; x := x + 1 od")
        plain = prog("x := x + 1")
        p = SpecifiedProgram(aug, mk_spec(st, ("x", "a"), rely="I"))
        c = SpecifiedProgram(plain, mk_spec(st, ("x",), aux=("a",), rely="I"))
        removal = Removal(aug, frozenset({"x"}), frozenset({"a"}), plain)
        assert validate_rule_instance("introduction", [p], c, st,
                                      removal=removal) == []


class TestTrees:
    def setup_method(self):
        self.st = tiny_structure(x=("nat", 0, 3))

    def _skip_sp(self, guar="x >= x~"):
        s = mk_spec(self.st, ("x",), rely="x = x~", guar=guar, eff="x = x~")
        return SpecifiedProgram(prog("skip"), s)

    def test_two_node_tree_depth(self):
        sp = self._skip_sp()
        tree = ProofNode(sp, "consequence", [ProofNode(sp, "skip")])
        rep = check_proof_tree(tree, self.st)
        assert rep.valid and rep.depth == 2

    def test_adaptation_gap(self):
        weak = self._skip_sp("x >= x~")
        strong = self._skip_sp("x = x~")
        bad = ProofNode(strong, "consequence", [ProofNode(weak, "skip")])
        rep = check_proof_tree(bad, self.st)
        assert not rep.valid and "consequence" in rep.failures[0]
        # rederiving from the axiom with the stronger guar succeeds
        rep2 = check_proof_tree(ProofNode(strong, "skip"), self.st)
        assert rep2.valid and rep2.depth == 1

    def test_monotone_subtree_replacement(self):
        sp = self._skip_sp()
        direct = ProofNode(sp, "skip")
        indirect = ProofNode(sp, "consequence", [ProofNode(sp, "skip")])
        outer = lambda sub: ProofNode(sp, "consequence", [sub])
        assert check_proof_tree(outer(direct), self.st).valid
        assert check_proof_tree(outer(indirect), self.st).valid

    def test_lsp_b_excludes_removals(self):
        st = tiny_structure(x=("nat", 0, 3), a=("nat", 0, 3))
        aug = prog("await true do a := x; x := x + 1 od")
        plain = prog("x := x + 1")
        p = ProofNode(SpecifiedProgram(aug, mk_spec(st, ("x", "a"), rely="I")),
                      "assignment")
        # the augmented program is an await, not an assignment: derive with
        # the await rule instead; keep the test focused on the LSP_B flag
        body_pre = "preserve(true, I) /\\ true"
        paw = ProofNode(
            SpecifiedProgram(
                prog("a := x; x := x + 1"),
                mk_spec(st, ("x", "a"), pre=body_pre, rely="I",
                        guar="true", eff="a = x~ /\\ x = x~ + 1")),
            "sequential")
        node = ProofNode(
            SpecifiedProgram(plain, mk_spec(st, ("x",), aux=("a",), rely="I")),
            "introduction",
            [ProofNode(SpecifiedProgram(aug, mk_spec(st, ("x", "a"), rely="I")),
                       "skip")],
            removal=Removal(aug, frozenset({"x"}), frozenset({"a"}), plain))
        rep = check_proof_tree(node, st, lsp_b=True)
        assert not rep.valid and "basic system" in rep.failures[0]

    def test_invalid_rule_instance_reports_path(self):
        sp = self._skip_sp()
        bad_child = ProofNode(
            SpecifiedProgram(prog("x := 1"), sp.spec), "skip")
        tree = ProofNode(sp, "consequence", [bad_child])
        rep = check_proof_tree(tree, self.st)
        assert not rep.valid and rep.failures[0].startswith("root.1")

    def test_invalid_removal_leaf_fails_the_tree(self):
        st = tiny_structure(x=("nat", 0, 3), a=("nat", 0, 3))
        aug = prog("await true do a := x; x := x + 1 od")
        plain = prog("x := x + 2")  # does not match the wrapper's core
        p = ProofNode(
            SpecifiedProgram(aug, mk_spec(st, ("x", "a"), rely="I",
                                          eff="I | (x = x~ + 1) | I")),
            "assignment")
        # premise shape is wrong too, but the removal check must be the
        # reported failure when the schema is otherwise satisfied
        node = ProofNode(
            SpecifiedProgram(plain,
                             mk_spec(st, ("x",), aux=("a",), rely="I")),
            "introduction",
            [ProofNode(SpecifiedProgram(
                aug, mk_spec(st, ("x", "a"), rely="I")), "skip")],
            removal=Removal(aug, frozenset({"x"}), frozenset({"a"}), plain))
        rep = check_proof_tree(node, st)
        assert not rep.valid


# ---------------------------------------------------------------------------
# The dining-philosophers derivation skeleton: generalised parallel over the
# three process specifications, then consequence, with each process derived
# from the one-meal specialisation of its code.

M = 3


def _dp_structure():
    forks = nat_sort("Forks", 0, 2)
    meals = nat_sort("Meals", 0, 1)
    vars = {}
    for j in range(M):
        vars[f"Frk{j}"] = forks
    for j in range(M):
        vars[f"Num{j}"] = meals
    for j in range(M):
        vars[f"Eating{j}"] = meals
    return Structure(sorts={"Forks": forks, "Meals": meals}, vars=vars)


GLO = tuple(f"Frk{j}" for j in range(M))
AUX = tuple(f"Num{j}" for j in range(M)) + tuple(f"Eating{j}" for j in range(M))
SCOPE = GLO + AUX

INV = ("Frk0 = 2 - (Eating1 + Eating2) /\\ "
       "Frk1 = 2 - (Eating2 + Eating0) /\\ "
       "Frk2 = 2 - (Eating0 + Eating1) /\\ "
       "(Eating0 = 1 => Frk0 = 2) /\\ "
       "(Eating1 = 1 => Frk1 = 2) /\\ "
       "(Eating2 = 1 => Frk2 = 2)")
G_SHARED = f"old({INV}) => ({INV})"


def _e(st, text):
    return parse_assertion(text, SCOPE, st.sorts, st.vars)


def _phil_texts(l):
    prv, nxt = (l - 1) % M, (l + 1) % M
    grab = (f"await Frk{l} = 2 do "
            f"Frk{prv} := Frk{prv} - 1; Frk{nxt} := Frk{nxt} - 1 od")
    drop = (f"await true do "
            f"Frk{prv} := Frk{prv} + 1; Frk{nxt} := Frk{nxt} + 1 od")
    return grab, drop, prv, nxt


def _phil_spec_parts(l):
    prv, nxt = (l - 1) % M, (l + 1) % M
    rely = (f"(old({INV}) => ({INV})) /\\ Eating{l} = Eating{l}~ "
            f"/\\ Num{l} = Num{l}~")
    wait = f"false \\/ ((Eating{prv} = 1 \\/ Eating{nxt} = 1) /\\ ({INV}))"
    eff = f"Eating{l} = 0 /\\ Num{l} = 1 /\\ ({INV})"
    return rely, wait, eff


P_ALL = (" /\\ ".join(f"Eating{j} = 0" for j in range(M)) + " /\\ "
         + " /\\ ".join(f"Num{j} = 0" for j in range(M)) + f" /\\ ({INV})")


def _phil_derivation(st, l):
    """Proof of phil_l sat (P_ALL, R_l, W_l, G /\\ R_k1 /\\ R_k2, E_l)."""
    grab_t, drop_t, prv, nxt = _phil_texts(l)
    rely, wait, eff = _phil_spec_parts(l)
    others = [k for k in range(M) if k != l]
    guar = (f"({G_SHARED})"
            + "".join(f" /\\ ({_phil_spec_parts(k)[0]})" for k in others))
    shared = dict(rely=rely, wait=wait, guar=guar)

    def sp(text, pre, eff_, bracket="curly"):
        return SpecifiedProgram(
            prog(text),
            Specification(GLO, AUX, _e(st, pre), _e(st, shared["rely"]),
                          _e(st, shared["wait"]), _e(st, shared["guar"]),
                          _e(st, eff_)), bracket)

    a1 = f"Eating{l} = 1 /\\ Num{l} = 0 /\\ ({INV})"
    a3 = f"Eating{l} = 0 /\\ Num{l} = 1 /\\ ({INV})"

    def body_spec(text, pre, eff_):
        return SpecifiedProgram(
            prog(text),
            Specification(GLO, AUX, _e(st, pre), _e(st, "I"),
                          Lit(False), Lit(True), _e(st, eff_)))

    def body_chain(stmt1, stmt2, q0, q1, q2, c1, c2):
        """Derivation of stmt1; stmt2 sat (q0, I, false, true, c1 | c2)."""
        ba1 = ProofNode(body_spec(stmt1, q0, f"I | ({c1}) | I"), "assignment")
        bc1 = ProofNode(body_spec(stmt1, q0, f"({q1}) /\\ ({c1})"),
                        "consequence", [ba1])
        ba2 = ProofNode(body_spec(stmt2, q1, f"I | ({c2}) | I"), "assignment")
        bc2 = ProofNode(body_spec(stmt2, q1, c2), "consequence", [ba2])
        seq = ProofNode(body_spec(f"{stmt1}; {stmt2}", q0,
                                  f"({c1}) | ({c2})"),
                        "sequential", [bc1, bc2])
        return seq

    # grab: body decrements both neighbour forks
    qb0 = (f"Frk0 = 2 /\\ Frk1 = 2 /\\ Frk2 = 2 /\\ "
           + " /\\ ".join(f"Eating{j} = 0" for j in range(M))
           + f" /\\ Num{l} = 0")
    qb1_frk = {j: 2 for j in range(M)}
    qb1_frk[prv] = 1
    qb1 = (" /\\ ".join(f"Frk{j} = {qb1_frk[j]}" for j in range(M)) + " /\\ "
           + " /\\ ".join(f"Eating{j} = 0" for j in range(M))
           + f" /\\ Num{l} = 0")
    c1 = f"old({qb0}) /\\ Frk{prv} = Frk{prv}~ - 1 /\\ I[Frk{prv}]"
    c2 = f"old({qb1}) /\\ Frk{nxt} = Frk{nxt}~ - 1 /\\ I[Frk{nxt}]"
    grab_body = body_chain(f"Frk{prv} := Frk{prv} - 1",
                           f"Frk{nxt} := Frk{nxt} - 1",
                           qb0, qb1, None, c1, c2)
    eg = a1
    aw_g = ProofNode(sp(grab_t, P_ALL,
                        f"({rely}) | ({eg}) | ({rely})"),
                     "await", [grab_body],
                     updates={f"Eating{l}": Lit(1)})
    ca_g = ProofNode(sp(grab_t, P_ALL, f"({a1}) /\\ true"),
                     "consequence", [aw_g])

    # drop: body increments both neighbour forks
    qd_frk = {l: 2, prv: 1, nxt: 1}
    qd0 = (" /\\ ".join(f"Frk{j} = {qd_frk[j]}" for j in range(M)) + " /\\ "
           + f"Eating{l} = 1 /\\ "
           + " /\\ ".join(f"Eating{j} = 0" for j in others)
           + f" /\\ Num{l} = 0")
    qd1_frk = dict(qd_frk)
    qd1_frk[prv] = 2
    qd1 = (" /\\ ".join(f"Frk{j} = {qd1_frk[j]}" for j in range(M)) + " /\\ "
           + f"Eating{l} = 1 /\\ "
           + " /\\ ".join(f"Eating{j} = 0" for j in others)
           + f" /\\ Num{l} = 0")
    d1 = f"old({qd0}) /\\ Frk{prv} = Frk{prv}~ + 1 /\\ I[Frk{prv}]"
    d2 = f"old({qd1}) /\\ Frk{nxt} = Frk{nxt}~ + 1 /\\ I[Frk{nxt}]"
    drop_body = body_chain(f"Frk{prv} := Frk{prv} + 1",
                           f"Frk{nxt} := Frk{nxt} + 1",
                           qd0, qd1, None, d1, d2)
    aw_d = ProofNode(sp(drop_t, a1, f"({rely}) | ({a3}) | ({rely})"),
                     "await", [drop_body],
                     updates={f"Eating{l}": Lit(0),
                              f"Num{l}": _e(st, f"Num{l} + 1")})
    ca_d = ProofNode(sp(drop_t, a1, f"({a3}) /\\ true"),
                     "consequence", [aw_d])

    def skip_chain(pre):
        ax = ProofNode(sp("skip", pre, rely), "skip")
        pr = ProofNode(sp("skip", pre, f"old({pre}) /\\ ({rely})"),
                       "pre", [ax])
        return pr

    # final skip keeps the hooked-pre form so the composed effect pins A3
    sk_eat = ProofNode(sp("skip", a1, f"({a1}) /\\ true"), "consequence",
                       [skip_chain(a1)])
    sk_think = skip_chain(a3)

    s3 = ProofNode(sp(f"{drop_t}; skip", a1,
                      f"true | (old({a3}) /\\ ({rely}))"),
                   "sequential", [ca_d, sk_think])
    s2 = ProofNode(sp(f"skip; {drop_t}; skip", a1,
                      f"true | (true | (old({a3}) /\\ ({rely})))"),
                   "sequential", [sk_eat, s3])
    s1 = ProofNode(sp(f"{grab_t}; skip; {drop_t}; skip", P_ALL,
                      f"true | (true | (true | (old({a3}) /\\ ({rely}))))"),
                   "sequential", [ca_g, s2])
    top = ProofNode(sp(f"{grab_t}; skip; {drop_t}; skip", P_ALL, eff),
                    "consequence", [s1])
    return top


def _dp_skeleton(st):
    phils = [_phil_derivation(st, l) for l in range(M)]
    relies = [_phil_spec_parts(l)[0] for l in range(M)]
    waits = [_phil_spec_parts(l)[1] for l in range(M)]
    effs = [_phil_spec_parts(l)[2] for l in range(M)]
    texts = [f"{_phil_texts(l)[0]}; skip; {_phil_texts(l)[1]}; skip"
             for l in range(M)]
    par_text = f"{{ {texts[0]} || {{ {texts[1]} || {texts[2]} }} }}"
    pg_spec = Specification(
        GLO, AUX, _e(st, P_ALL),
        _e(st, " /\\ ".join(f"({r})" for r in relies)),
        Lit(False), _e(st, G_SHARED),
        _e(st, " /\\ ".join(f"({e})" for e in effs)))
    pg = ProofNode(SpecifiedProgram(prog(par_text), pg_spec),
                   "parallel-general", phils)
    top_spec = Specification(
        GLO, AUX, _e(st, P_ALL), _e(st, "I"), Lit(False),
        _e(st, G_SHARED),
        _e(st, " /\\ ".join(f"Eating{j} = 0 /\\ Num{j} = 1"
                            for j in range(M)) + f" /\\ ({INV})"))
    return ProofNode(SpecifiedProgram(prog(par_text), top_spec),
                     "consequence", [pg])


def test_dining_philosophers_skeleton():
    st = _dp_structure()
    tree = _dp_skeleton(st)
    rep = check_proof_tree(tree, st)
    assert rep.valid, rep.failures
    assert rep.depth >= 6


def test_dekker_wait_disjointness_obligation():
    # the parallel composition question for the mutual-exclusion processes:
    # the two wait-conditions (eff-conditions are false) cannot hold at once
    from rgkit.sorts import bool_sort
    flag = bool_sort("Flag")
    ident = nat_sort("Id", 0, 1)
    st = Structure(sorts={"Flag": flag, "Id": ident},
                   vars={"Ok0": flag, "Ok1": flag, "Turn": ident})
    scope = ("Ok0", "Ok1", "Turn")
    w = ["(Ok0 /\\ Turn = 0) \\/ (not Ok0 /\\ Turn = 1 /\\ not Ok1)",
         "(Ok1 /\\ Turn = 1) \\/ (not Ok1 /\\ Turn = 0 /\\ not Ok0)"]
    ob = Obligation(
        "validity",
        parse_assertion(f"not (({w[0]}) /\\ ({w[1]}))", scope, st.sorts,
                        st.vars),
        scope, ("parallel", 1))
    assert discharge_obligation(ob, st)


def test_discharge_trivia():
    st = tiny_structure(x=("nat", 0, 3))
    yes = Obligation("validity", expr("x = x", st), ("x",), ("consequence", 1))
    no = Obligation("validity", expr("x > x", st), ("x",), ("consequence", 1))
    assert discharge_obligation(yes, st)
    assert not discharge_obligation(no, st)
    from rgkit.formula import valid
    witness = valid(expr("x > x", st), st)
    assert witness is not None and witness[0][0] == ("x", False)
