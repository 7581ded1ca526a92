import math

import pytest

from qualinet.compile import (
    CompileError,
    build_skeleton,
    collect_impacted_facts,
    compile_model,
    derive_activities,
    interval_labels,
    resolve_goal,
    synthesize_network,
)
from qualinet.model import parse_model
from qualinet.network import NetworkFormatError, CompiledNetwork, NetworkNode, network_from_json

FORK_SOURCE = """
model "fork" {
  activity Root {
    activity Left
    activity Right
  }
  entity E
  fact E.x
  impact E.x -> Left +
  impact E.x -> Right -
  indicator M for E.x { intervals [0, 1, 2] arithmetic mean = 0 + 1 * level variance 0.5 }
  indicator Goal for Root { intervals [0, 10] arithmetic mean = 5 + 0 * level variance 1 }
  goal "g" { question "q" metric Goal activity Root }
}
"""

PRUNE_SOURCE = """
model "prune" {
  activity Top {
    activity Busy {
      activity Leaf
    }
    activity Idle {
      activity Sleepy
    }
  }
  entity E
  fact E.x
  impact E.x -> Leaf +
  indicator M for E.x { intervals [0, 1] arithmetic mean = 0 + 1 * level variance 1 }
  indicator G for Top { intervals [0, 1] arithmetic mean = 0 + 1 * level variance 1 }
  goal "g" { question "q" metric G activity Top }
}
"""


class TestDeriveActivities:
    def test_cm1_keeps_all_eight(self, cm1_model):
        goal = resolve_goal(cm1_model, "maintenance")
        derived = derive_activities(cm1_model, goal)
        assert set(derived) == {
            "Maintenance", "QualityAssurance", "Implementation", "Analysis",
            "Testing", "Modification", "Comprehension", "CodeReading",
        }
        assert derived[0] == "Maintenance"

    def test_goal_on_impacted_leaf_is_singleton(self, cm1_model):
        goal = resolve_goal(cm1_model, "maintenance")
        leaf_goal = type(goal)(goal.name, goal.question, goal.metric, "CodeReading")
        assert derive_activities(cm1_model, leaf_goal) == ("CodeReading",)

    def test_prunes_branches_without_impacts(self):
        model = parse_model(PRUNE_SOURCE)
        derived = derive_activities(model, model.goals[0])
        assert derived == ("Top", "Busy", "Leaf")

    def test_goal_subtree_without_impacts_keeps_only_goal(self):
        source = """
        model "bare" {
          activity Solo
          indicator G for Solo { intervals [0, 1] arithmetic mean = 0 + 1 * level variance 1 }
          goal "g" { question "q" metric G activity Solo }
        }
        """
        model = parse_model(source)
        assert derive_activities(model, model.goals[0]) == ("Solo",)

    def test_unknown_activity(self, cm1_model):
        goal = cm1_model.goals[0]
        bad = type(goal)(goal.name, goal.question, goal.metric, "Nowhere")
        with pytest.raises(CompileError, match="unknown activity"):
            derive_activities(cm1_model, bad)


class TestCollectImpactedFacts:
    def test_cm1_collects_three(self, cm1_model):
        goal = resolve_goal(cm1_model, None)
        derived = derive_activities(cm1_model, goal)
        facts, impacts = collect_impacted_facts(cm1_model, derived)
        assert [str(f) for f in facts] == [
            "Module.Extent", "Implementation.Regularity", "Comment.Appropriateness",
        ]
        assert len(impacts) == 3

    def test_empty_activity_set(self, cm1_model):
        facts, impacts = collect_impacted_facts(cm1_model, ())
        assert facts == () and impacts == ()

    def test_fact_with_two_impacts_yields_one_node_two_edges(self):
        model = parse_model(FORK_SOURCE)
        derived = derive_activities(model, model.goals[0])
        facts, impacts = collect_impacted_facts(model, derived)
        assert [str(f) for f in facts] == ["E.x"]
        assert len(impacts) == 2
        skeleton = build_skeleton(model, model.goals[0])
        impact_edges = [e for e in skeleton.edges if e.tag == "impact"]
        assert len(impact_edges) == 2
        assert {e.target for e in impact_edges} == {"Left", "Right"}


class TestBuildSkeleton:
    def test_cm1_structure(self, cm1_model):
        skeleton = build_skeleton(cm1_model, resolve_goal(cm1_model, None))
        kinds = {}
        for node in skeleton.nodes:
            kinds[node.kind] = kinds.get(node.kind, 0) + 1
        assert kinds == {"activity": 8, "fact": 3, "indicator": 4}
        assert len(skeleton.nodes) == 15
        assert len(skeleton.edges) == 14
        tags = {}
        for edge in skeleton.edges:
            tags[edge.tag] = tags.get(edge.tag, 0) + 1
        assert tags == {"subactivity": 7, "impact": 3, "indicates": 4}

    def test_edge_directions(self, cm1_model):
        skeleton = build_skeleton(cm1_model, resolve_goal(cm1_model, None))
        for edge in skeleton.edges:
            if edge.tag == "subactivity":
                assert edge.source != "Maintenance"
            if edge.tag == "impact":
                assert "." in edge.source
            if edge.tag == "indicates":
                assert edge.target in {
                    "AvgModuleSize", "AvgCyclomaticComplexity", "CommentRatio", "ChangeEffort",
                }

    def test_single_activity_with_indicator(self):
        source = """
        model "solo" {
          activity Solo
          indicator G for Solo { intervals [0, 1] arithmetic mean = 0 + 1 * level variance 1 }
          goal "g" { question "q" metric G activity Solo }
        }
        """
        model = parse_model(source)
        skeleton = build_skeleton(model, model.goals[0])
        assert len(skeleton.nodes) == 2
        assert len(skeleton.edges) == 1
        assert skeleton.edges[0].tag == "indicates"

    def test_fact_without_indicator_is_an_error(self):
        source = """
        model "m" {
          activity Act
          entity E
          fact E.naked
          impact E.naked -> Act +
          indicator G for Act { intervals [0, 1] arithmetic mean = 0 + 1 * level variance 1 }
          goal "g" { question "q" metric G activity Act }
        }
        """
        model = parse_model(source)
        with pytest.raises(CompileError, match="E.naked"):
            build_skeleton(model, model.goals[0])


class TestSynthesize:
    def test_cm1_columns_sum_to_one(self, cm1_net):
        for node in cm1_net.nodes:
            combos = len(node.cpt) // node.cardinality
            for c in range(combos):
                total = math.fsum(node.cpt[s * combos + c] for s in range(node.cardinality))
                assert total == pytest.approx(1.0, abs=1e-9)

    def test_cm1_npt_shapes(self, cm1_net):
        for node in cm1_net.nodes:
            combos = 1
            for p in node.parents:
                combos *= cm1_net.node_map[p].cardinality
            assert len(node.cpt) == combos * node.cardinality

    def test_negative_impact_inverts_code_reading(self, cm1_net):
        node = cm1_net.node("CodeReading")
        assert node.parents == ("Module.Extent",)
        combos = 3  # parent has three states
        p_high_given_low_extent = node.cpt[1 * combos + 0]
        p_high_given_high_extent = node.cpt[1 * combos + 2]
        assert p_high_given_low_extent > p_high_given_high_extent

    def test_root_fact_defaults_to_uniform_prior(self, cm1_net):
        node = cm1_net.node("Module.Extent")
        assert node.parents == ()
        assert node.cpt == (1 / 3, 1 / 3, 1 / 3)

    def test_explicit_prior_stored_verbatim(self):
        source = """
        model "m" {
          activity Act
          quantify Act { states 3 prior [0.2, 0.3, 0.5] }
          indicator G for Act { intervals [0, 1] arithmetic mean = 0 + 1 * level variance 1 }
          goal "g" { question "q" metric G activity Act }
        }
        """
        net = compile_model(parse_model(source), None)
        assert net.node("Act").cpt == (0.2, 0.3, 0.5)

    def test_weights_must_reference_parents(self):
        source = """
        model "m" {
          activity Act
          entity E
          fact E.x
          fact E.y
          impact E.x -> Act +
          quantify Act { weights { E.y : 2.0 } }
          indicator M for E.x { intervals [0, 1] arithmetic mean = 0 + 1 * level variance 1 }
          indicator G for Act { intervals [0, 1] arithmetic mean = 0 + 1 * level variance 1 }
          goal "g" { question "q" metric G activity Act }
        }
        """
        model = parse_model(source)
        with pytest.raises(CompileError, match="not one of its parents"):
            synthesize_network(model, build_skeleton(model, model.goals[0]))

    def test_prior_on_node_with_parents_is_rejected(self):
        source = """
        model "m" {
          activity Act
          entity E
          fact E.x
          impact E.x -> Act +
          quantify Act { states 2 prior [0.5, 0.5] }
          indicator M for E.x { intervals [0, 1] arithmetic mean = 0 + 1 * level variance 1 }
          indicator G for Act { intervals [0, 1] arithmetic mean = 0 + 1 * level variance 1 }
          goal "g" { question "q" metric G activity Act }
        }
        """
        model = parse_model(source)
        with pytest.raises(CompileError, match="root"):
            synthesize_network(model, build_skeleton(model, model.goals[0]))

    def test_weighted_parent_shifts_aggregation(self):
        template = """
        model "m" {{
          activity Act
          entity E
          fact E.x
          fact E.y
          impact E.x -> Act +
          impact E.y -> Act +
          quantify Act {{ states 2 variance 0.05 weights {{ E.x : {wx} E.y : 1.0 }} }}
          indicator Mx for E.x {{ intervals [0, 1] arithmetic mean = 0 + 1 * level variance 1 }}
          indicator My for E.y {{ intervals [0, 1] arithmetic mean = 0 + 1 * level variance 1 }}
          indicator G for Act {{ intervals [0, 1] arithmetic mean = 0 + 1 * level variance 1 }}
          goal "g" {{ question "q" metric G activity Act }}
        }}
        """
        heavy = compile_model(parse_model(template.format(wx="9.0")), None)
        even = compile_model(parse_model(template.format(wx="1.0")), None)
        # Column with E.x high, E.y low: a heavier E.x weight pulls P(Act=high) up.
        node_h, node_e = heavy.node("Act"), even.node("Act")
        combos = 9
        column = 2 * 3 + 0  # E.x=high(2), E.y=low(0), last parent fastest
        assert node_h.cpt[1 * combos + column] > node_e.cpt[1 * combos + column]


class TestGoalResolution:
    def test_case_insensitive_activity_match(self, cm1_model):
        goal = resolve_goal(cm1_model, "maintenance")
        assert goal.activity == "Maintenance"

    def test_match_by_goal_name(self, cm1_model):
        goal = resolve_goal(cm1_model, "planning of future maintenance efforts")
        assert goal.metric == "ChangeEffort"

    def test_single_goal_is_default(self, cm1_model):
        assert resolve_goal(cm1_model, None) == cm1_model.goals[0]

    def test_unknown_goal(self, cm1_model):
        with pytest.raises(CompileError, match="no goal named"):
            resolve_goal(cm1_model, "world domination")

    def test_no_goals(self):
        model = parse_model('model "m" { activity A }')
        with pytest.raises(CompileError, match="no goals"):
            compile_model(model, None)


class TestDeterminismAndFormat:
    def test_compile_is_byte_identical_across_runs(self, cm1_source):
        first = compile_model(parse_model(cm1_source), "maintenance").to_json()
        second = compile_model(parse_model(cm1_source), "maintenance").to_json()
        assert first == second

    def test_serialization_round_trip(self, cm1_net):
        text = cm1_net.to_json()
        loaded = network_from_json(text)
        assert loaded.to_json() == text
        assert loaded == cm1_net

    def test_network_validation_rejects_cycles(self):
        nodes = (
            NetworkNode("A", "fact", ("a", "b"), ("B",), (0.5, 0.5, 0.5, 0.5)),
            NetworkNode("B", "fact", ("a", "b"), ("A",), (0.5, 0.5, 0.5, 0.5)),
        )
        with pytest.raises(NetworkFormatError, match="cycle"):
            CompiledNetwork(name="loop", nodes=nodes)

    def test_network_validation_rejects_bad_columns(self):
        with pytest.raises(NetworkFormatError, match="sums"):
            CompiledNetwork(
                name="bad",
                nodes=(NetworkNode("A", "fact", ("a", "b"), (), (0.7, 0.7)),),
            )

    def test_compiled_network_is_acyclic(self, cm1_net):
        order = cm1_net.topological_order
        seen = set()
        for node_id in order:
            for parent in cm1_net.node(node_id).parents:
                assert parent in seen
            seen.add(node_id)

    def test_interval_labels(self):
        labels = interval_labels((3.9, 11.7375, 66.6))
        assert labels == ("[3.9,11.7375)", "[11.7375,66.6]")

    def test_state_space_size(self, cm1_net):
        assert cm1_net.state_space_size == 995_328
