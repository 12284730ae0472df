# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

import pytest
from factories import make_network

from grid import (
    CaseError,
    CaseFormatError,
    CaseValidationError,
    Line,
    base_loads,
    connected_islands,
    dump_case,
    load_case,
    parse_case,
    read_loads,
    serialize_case,
    validate,
    write_loads,
)

TWO_BUS_DOC = """\
version: 1
name: tiny
base_mva: 100.0
buses:
- {id: 1, load_mw: 0.0, is_reference: true}
- {id: 2, load_mw: 50.0, is_reference: false}
generators:
- {id: 1, bus: 1, pmin_mw: 0.0, pmax_mw: 100.0, cost_per_mwh: 10.0, ramp_mw_per_min: 2.0}
lines:
- {id: 1, from: 1, to: 2, x_pu: 0.1, rate_a_mw: 100.0}
"""

NODE_SPLIT_DOC = """\
version: 1
name: shaded
buses:
- {id: 1, load_mw: 0.0, is_reference: true}
- {id: 2, load_mw: 40.0, is_reference: false}
- {id: 3, load_mw: 40.0, is_reference: false}
generators:
- {id: 1, bus: 1, pmin_mw: 0.0, pmax_mw: 30.0, cost_per_mwh: 10.0, ramp_mw_per_min: 1.0}
- {id: 2, bus: 1, pmin_mw: 0.0, pmax_mw: 30.0, cost_per_mwh: 11.0, ramp_mw_per_min: 1.0}
- {id: 3, bus: 1, pmin_mw: 0.0, pmax_mw: 30.0, cost_per_mwh: 12.0, ramp_mw_per_min: 1.0}
lines:
- {id: 1, from: 1, to: 2, x_pu: 0.1, rate_a_mw: 100.0}
- {id: 2, from: 2, to: 3, x_pu: 0.1, rate_a_mw: 100.0}
- {id: 3, from: 1, to: 3, x_pu: 0.1, rate_a_mw: 100.0}
"""


def test_parse_minimal_case():
    """Test that the smallest valid document parses field for field."""
    net = parse_case(TWO_BUS_DOC)

    assert net.name == "tiny"
    assert len(net.buses) == 2
    assert len(net.generators) == 1
    assert len(net.lines) == 1
    assert net.reference_bus == 1
    assert net.lines[0].from_bus == 1
    assert net.lines[0].to_bus == 2
    assert net.buses[1].load_mw == 50.0


def test_parse_three_generators_on_one_bus():
    """Test a node-split style case with every generator on the reference bus."""
    net = parse_case(NODE_SPLIT_DOC)

    assert len(net.buses) == 3
    assert len(net.generators) == 3
    assert net.gens_at_bus() == {1: [1, 2, 3], 2: [], 3: []}
    assert net.base_mva == 100.0


def test_parse_two_reference_buses():
    """Test that both reference buses are named in the violation."""
    text = TWO_BUS_DOC.replace(
        "load_mw: 50.0, is_reference: false", "load_mw: 50.0, is_reference: true"
    )

    with pytest.raises(CaseValidationError) as exc:
        parse_case(text)

    assert len(exc.value.violations) == 1
    assert "multiple reference buses: 1, 2" in str(exc.value)


@pytest.mark.parametrize(
    "text,match",
    [
        ("version: 1\nbuses: [\n", "Syntax error at line"),
        (TWO_BUS_DOC.replace("version: 1", "version: 2"), "Unsupported case version 2"),
        ("- just\n- a list\n", "must be a mapping"),
        (TWO_BUS_DOC.replace("x_pu: 0.1,", "x_pu: 0.1, colour: red,"), "lines"),
        (TWO_BUS_DOC.replace("pmax_mw: 100.0", "pmax_mw: lots"), "generators"),
    ],
)
def test_parse_format_errors(text, match):
    """Test syntax, version and schema failures."""
    with pytest.raises(CaseFormatError, match=match):
        parse_case(text)


def test_syntax_error_reports_position():
    """Test that a broken flow mapping is located by line and column."""
    text = TWO_BUS_DOC.replace("- {id: 2, load_mw: 50.0", "- {id: 2, load_mw: 50.0]")

    with pytest.raises(CaseFormatError) as exc:
        parse_case(text)

    assert "line 6" in str(exc.value)


def test_negative_load_override():
    """Test that negative demand is rejected unless explicitly allowed."""
    text = TWO_BUS_DOC.replace("load_mw: 50.0", "load_mw: -5.0")

    with pytest.raises(CaseValidationError, match="negative load"):
        parse_case(text)
    assert parse_case(text, allow_negative_loads=True).buses[1].load_mw == -5.0


def test_serialize_round_trip(two_bus):
    """Test that parsing a serialized network restores it."""
    assert parse_case(serialize_case(two_bus)) == two_bus


def test_serialize_keeps_base_mva(two_bus):
    """Test that a non-default base survives serialization."""
    net = two_bus.model_copy(update={"base_mva": 50.0})

    document = serialize_case(net)

    assert "base_mva: 50.0" in document
    assert parse_case(document).base_mva == 50.0


@pytest.mark.parametrize("name", ["two_bus", "three_bus", "rts24"])
def test_bundled_cases_are_valid_and_stable(name):
    """Test that bundled cases validate and serialize byte-stably."""
    net = load_case(name)

    assert validate(net) == []
    assert serialize_case(net) == serialize_case(load_case(name))
    assert parse_case(serialize_case(net)) == net


def test_rts24_dimensions(rts24):
    """Test the size of the 24-bus case."""
    assert len(rts24.buses) == 24
    assert len(rts24.generators) == 32
    assert len(rts24.lines) == 38
    assert rts24.reference_bus == 13


def test_validate_valid_case(two_bus):
    """Test that a valid case has an empty report."""
    assert validate(two_bus) == []


@pytest.mark.parametrize(
    "update,record,message",
    [
        ({"x_pu": 0.0}, "line 1", "x_pu must be positive"),
        ({"rate_a_mw": -1.0}, "line 1", "rate_a_mw must be positive"),
        ({"to_bus": 1}, "line 1", "both ends at bus 1"),
        ({"to_bus": 9}, "line 1", "unknown endpoint bus 9"),
    ],
)
def test_validate_single_line_violation(two_bus, update, record, message):
    """Test that exactly one injected line violation yields exactly one entry."""
    line = two_bus.lines[0].model_copy(update=update)
    net = two_bus.model_copy(update={"lines": (line,)})

    report = validate(net)

    assert len(report) == 1
    assert report[0].record == record
    assert message in report[0].message


@pytest.mark.parametrize(
    "update,message",
    [
        ({"pmin_mw": -1.0}, "pmin_mw -1.0 is negative"),
        ({"pmin_mw": 150.0}, "exceeds pmax_mw"),
        ({"cost_per_mwh": -2.0}, "cost_per_mwh -2.0 is negative"),
        ({"bus": 7}, "unknown bus 7"),
        ({"ramp_mw_per_min": -0.5}, "ramp_mw_per_min -0.5 is negative"),
    ],
)
def test_validate_single_generator_violation(two_bus, update, message):
    """Test that exactly one injected generator violation yields exactly one entry."""
    gen = two_bus.generators[0].model_copy(update=update)
    net = two_bus.model_copy(update={"generators": (gen,)})

    report = validate(net)

    assert len(report) == 1
    assert report[0].record == "generator 1"
    assert message in report[0].message


def test_validate_duplicate_line_ids(two_bus):
    """Test that duplicate line ids are reported once."""
    net = two_bus.model_copy(update={"lines": two_bus.lines * 2})

    report = validate(net)

    assert [str(v) for v in report] == ["line 1: duplicate line id"]


def test_validate_missing_reference(two_bus):
    """Test a network without a reference bus."""
    buses = tuple(b.model_copy(update={"is_reference": False}) for b in two_bus.buses)

    report = validate(two_bus.model_copy(update={"buses": buses}))

    assert [str(v) for v in report] == ["network: no reference bus"]


def test_validate_disconnected_islands():
    """Test that a two-island case lists its island memberships."""
    net = make_network(4, [(1, 2), (3, 4)], gens=[(1, 100.0)])

    report = validate(net)

    assert len(report) == 1
    assert report[0].record == "network"
    assert "islands: 1,2 | 3,4" in report[0].message
    assert connected_islands(net) == [[1, 2], [3, 4]]


def test_parallel_lines_are_allowed():
    """Test that two lines between the same buses validate."""
    net = make_network(2, [(1, 2), (2, 1)], gens=[(1, 100.0)])

    assert validate(net) == []


def test_line_accepts_field_names_and_aliases():
    """Test that lines build from either the document keys or the attribute names."""
    by_alias = Line.model_validate({"id": 1, "from": 1, "to": 2, "x_pu": 0.1, "rate_a_mw": 10.0})
    by_name = Line(id=1, from_bus=1, to_bus=2, x_pu=0.1, rate_a_mw=10.0)

    assert by_alias == by_name


def test_load_case_unknown_name():
    """Test that an unknown case lists the bundled ones."""
    with pytest.raises(CaseError, match="bundled: rts24, three_bus, two_bus"):
        load_case("no_such_case")


def test_load_case_from_path(tmp_path, three_bus):
    """Test loading a case written to disk."""
    path = tmp_path / "case.yaml"
    dump_case(three_bus, path)

    assert load_case(path) == three_bus
    assert load_case(str(path)) == three_bus


def test_base_loads(three_bus):
    """Test that the base load vector is keyed by bus id."""
    assert base_loads(three_bus) == {1: 0.0, 2: 60.0, 3: 120.0}


def test_loads_file_round_trip(tmp_path):
    """Test writing and reading a loads document."""
    path = tmp_path / "loads.yaml"
    write_loads({2: 55.5, 1: 0.0}, path)

    assert read_loads(path) == {1: 0.0, 2: 55.5}


@pytest.mark.parametrize(
    "content",
    ["loads_mw: [1, 2]\n", "other: 1\n", "loads_mw: {a: 1}\n", "loads_mw: {1: [\n"],
)
def test_read_loads_rejects_bad_documents(tmp_path, content):
    """Test malformed loads documents."""
    path = tmp_path / "loads.yaml"
    path.write_text(content)

    with pytest.raises(CaseFormatError):
        read_loads(path)
