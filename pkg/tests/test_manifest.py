from pathlib import Path

import pytest

from metricmux.errors import CycleDetected, DuplicateOutput, ManifestSyntaxError, UnknownOp
from metricmux.manifest import parse_manifest, read_manifest

SHIPPED = Path(__file__).parent.parent / "manifests" / "newtx-derivation.manifest"

TWO_STEPS = """
# a comment
[step second]
op = pltotf
in = a.pl
out = a.tfm

[step first]
op = tftopl
in = base.tfm
out = a.pl
charcode-format = octal
"""


def test_shipped_manifest():
    manifest = read_manifest(SHIPPED)
    assert len(manifest) == 13
    assert manifest.order == list(range(1, 14))
    assert [s.name for s in manifest.ordered()][:3] == ["R1", "R2", "R3"]
    assert manifest.root_inputs() == ["rtxmi.pfb", "rtxmi.afm"]
    assert [s.name for s in manifest.steps if s.assumed] == ["R13"]
    assert manifest.step(4).op == "ew"
    assert manifest.step(4).inputs == ("rntxmi.afm",)
    assert manifest.step(2).method == "Generated by FF"


def test_shipped_manifest_cone():
    manifest = read_manifest(SHIPPED)
    # everything the first EW output feeds
    assert manifest.cone([4]) == {4, 5, 6, 7, 8, 9}
    assert manifest.readers_of("rntxmi-2.tfm") == {5, 7}


def test_order_follows_dependencies():
    manifest = parse_manifest(TWO_STEPS)
    assert [s.name for s in manifest.ordered()] == ["first", "second"]
    assert manifest.depends_on == {1: {2}, 2: set()}
    assert manifest.root_inputs() == ["base.tfm"]
    first = manifest.step(2)
    assert first.options == {"charcode-format": "octal"}
    assert first.label == "tftopl first"


def test_file_keys_become_inputs():
    manifest = parse_manifest("[step c]\nop = compose\nplan = fonts.plan\nout = x.vf x.tfm\n")
    assert manifest.step(1).inputs == ("fonts.plan",)
    assert manifest.step(1).outputs == ("x.vf", "x.tfm")


def test_cycle():
    text = ("[step a]\nop = pltotf\nin = b.pl\nout = a.tfm\n"
            "[step b]\nop = tftopl\nin = a.tfm\nout = b.pl\n")
    with pytest.raises(CycleDetected) as info:
        parse_manifest(text)
    assert info.value.cycle == ["a", "b", "a"]


def test_duplicate_output():
    text = ("[step a]\nop = pltotf\nin = x.pl\nout = a.tfm\n"
            "[step b]\nop = pltotf\nin = y.pl\nout = a.tfm\n")
    with pytest.raises(DuplicateOutput):
        parse_manifest(text)


def test_unknown_op():
    with pytest.raises(UnknownOp):
        parse_manifest("[step a]\nop = fontforge\nin = a.sfd\nout = a.pfb\n")


@pytest.mark.parametrize("text", [
    "[step a]\nop = pltotf\nin = a.pl\nout = a.tfm\ncolour = red\n",
    "[step a]\nin = a.pl\nout = a.tfm\n",
    "[step a]\nop = pltotf\nin = a.pl\n",
    "[step a]\nop = pltotf\nout = a.tfm\n",
    "[target a]\nop = pltotf\nin = a.pl\nout = a.tfm\n",
    "[step a]\nop = pltotf\nin = a.pl\nout = a.tfm\n[step a]\nop = pltotf\nin = b.pl\nout = b.tfm\n",
    "op = pltotf\n",
    "[step a\n",
])
def test_syntax_errors(text):
    with pytest.raises(ManifestSyntaxError):
        parse_manifest(text)
