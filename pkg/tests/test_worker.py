import shutil
import tempfile
import unittest
from pathlib import Path

from metricmux.errors import MissingInput, PipelineError
from metricmux.fixword import ZERO
from metricmux.manifest import parse_manifest, read_manifest
from metricmux.optical import ew_metrics
from metricmux.pl import parse_pl
from metricmux.tfm import emit_tfm, parse_tfm
from metricmux.worker import BuildRunner, StepWorker, load_metrics, run
from tests.helpers import write_afm

SHIPPED = Path(__file__).parent.parent / "manifests" / "newtx-derivation.manifest"

EXTERNAL_AFMS = {
    "rntxmi.afm": 0, "rntxmi7.afm": 40, "rntxmi5.afm": 80, "rtxmi.afm": 0, "rtxmi7.afm": 40,
}
STUBS = ("rntxmi.sfd", "rtxmi.sfd", "rntxmi.pfb", "rntxmi7.pfb", "rntxmi5.pfb", "rtxmi.pfb",
         "rtxmi7.pfb")

SMALL_PL = "(DESIGNSIZE R 10.0)\n(FONTDIMEN (SLANT R 0.25) (QUAD R 1.0))\n(CHARACTER O 101 (CHARWD R 0.5))\n"


class TestStepWorker(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.base = Path(self.tmpdir.name)
        (self.base / "a.pl").write_text(SMALL_PL, encoding="latin-1")
        write_afm(self.base / "test.afm")

    def tearDown(self):
        self.tmpdir.cleanup()

    def worker(self, text):
        return StepWorker(parse_manifest(text).step(1), self.base)

    def test_pltotf_then_tftopl(self):
        outputs = self.worker("[step a]\nop = pltotf\nin = a.pl\nout = a.tfm\n").run()
        self.assertEqual(list(outputs), ["a.tfm"])
        (self.base / "a.tfm").write_bytes(outputs["a.tfm"])

        outputs = self.worker("[step b]\nop = tftopl\nin = a.tfm\nout = b.pl\n"
                              "charcode-format = octal\n").run()
        text = outputs["b.pl"].decode("latin-1")
        self.assertIn("(CHARACTER O 101", text)
        self.assertEqual(parse_pl(text), parse_tfm((self.base / "a.tfm").read_bytes()))

    def test_unslant(self):
        outputs = self.worker("[step u]\nop = unslant\nin = a.pl\nout = u.pl\n").run()
        m = parse_pl(outputs["u.pl"].decode("latin-1"))
        self.assertEqual(m.slant, ZERO)

    def test_ew_reads_afm(self):
        outputs = self.worker("[step e]\nop = ew\nin = test.afm\nout = e.tfm\n").run()
        expected = ew_metrics(load_metrics(self.base / "test.afm"))
        self.assertEqual(parse_tfm(outputs["e.tfm"]).chars, expected.chars)

    def test_afm2tfm_with_map(self):
        outputs = self.worker("[step c]\nop = afm2tfm\nin = test.afm\nout = rtest.tfm rtest.map\n"
                              "pfb = rtest.pfb\n").run()
        self.assertEqual(outputs["rtest.map"], b"rtest TestRoman <rtest.pfb\n")

    def test_map_step(self):
        outputs = self.worker("[step m]\nop = map\nin = test.afm\nout = test.map\ntfm = rtest\n").run()
        self.assertEqual(outputs["test.map"], b"rtest TestRoman\n")

    def test_external_does_not_run_in_process(self):
        with self.assertRaises(PipelineError):
            self.worker("[step x]\nop = external\nout = x.pfb\n").run()

    def test_names_format_needs_enc(self):
        (self.base / "a.tfm").write_bytes(
            self.worker("[step a]\nop = pltotf\nin = a.pl\nout = a.tfm\n").run()["a.tfm"])
        with self.assertRaises(PipelineError):
            self.worker("[step b]\nop = tftopl\nin = a.tfm\nout = b.pl\n"
                        "charcode-format = names\n").run()


class TestBuildRunner(unittest.TestCase):
    def setUp(self):
        self.tmpdir = tempfile.TemporaryDirectory()
        self.base = Path(self.tmpdir.name)
        self.cache = self.base / ".cache"
        shutil.copy(SHIPPED, self.base / "newtx.manifest")
        self.manifest = read_manifest(self.base / "newtx.manifest")
        for name, widen in EXTERNAL_AFMS.items():
            write_afm(self.base / name, name[:-4], angle=-14, widen=widen)
        for name in STUBS:
            (self.base / name).write_bytes(b"stub " + name.encode("ascii"))

    def tearDown(self):
        self.tmpdir.cleanup()

    def build(self, **kwargs):
        return BuildRunner(self.manifest, self.base, self.cache, **kwargs).run()

    def test_first_run_then_cached(self):
        messages = []
        report = BuildRunner(self.manifest, self.base, self.cache,
                             status_callback=messages.append).run()
        self.assertTrue(report.ok)
        self.assertEqual(report.executed, ["R3", "R4", "R6", "R7", "R9", "R11", "R13"])
        self.assertEqual(report.external, ["R1", "R2", "R5", "R8", "R10", "R12"])
        self.assertEqual(len(messages), 13)
        self.assertTrue((self.base / "rntxmi-4.tfm").is_file())

        again = self.build(jobs=3)
        self.assertEqual(again.executed, [])
        self.assertEqual(len(again.cached), 7)

    def test_changed_input_reruns_its_cone(self):
        self.build()
        write_afm(self.base / "rntxmi.afm", "rntxmi", angle=-14, widen=10)
        report = self.build()
        self.assertEqual(report.executed, ["R3", "R4", "R7"])
        self.assertEqual(report.cached, ["R6", "R9", "R11", "R13"])

    def test_deleted_output_is_restored(self):
        self.build()
        (self.base / "rtxmi7.tfm").unlink()
        report = self.build()
        self.assertEqual(report.executed, [])
        self.assertTrue((self.base / "rtxmi7.tfm").is_file())

    def test_edited_intermediate_reruns_its_readers(self):
        self.build()
        intermediate = self.base / "rntxmi-2.tfm"
        edited = emit_tfm(ew_metrics(parse_tfm(intermediate.read_bytes())))
        intermediate.write_bytes(edited)

        report = self.build()
        self.assertEqual(report.executed, ["R7"])
        self.assertEqual(intermediate.read_bytes(), edited)

    def test_verify(self):
        self.build()
        report = self.build(verify=True)
        self.assertEqual(report.mismatches, [])
        self.assertEqual(report.statuses[3], "cached (verified)")

    def test_dry_run_has_no_side_effects(self):
        (self.base / "rtxmi.afm").unlink()
        report = run(self.manifest, self.base, self.cache, dry_run=True)
        self.assertEqual(len(report.planned), 13)
        self.assertIn("(assumed)", report.statuses[13])
        self.assertFalse(self.cache.exists())
        self.assertFalse((self.base / "rntxmi.tfm").exists())

    def test_missing_root_input(self):
        (self.base / "rtxmi.pfb").unlink()
        with self.assertRaises(MissingInput):
            self.build()

    def test_missing_external_output_fails_and_skips(self):
        (self.base / "rntxmi5.afm").unlink()
        report = self.build()
        self.assertFalse(report.ok)
        self.assertEqual(list(report.failed), ["R8"])
        self.assertEqual(report.skipped, ["R9"])
        self.assertIn("R13", report.executed)

    def test_report_lines(self):
        report = self.build()
        lines = report.lines(self.manifest)
        self.assertEqual(lines[0], "(1/13) external R1: external")
        self.assertEqual(lines[-1], "7 executed, 0 cached, 6 external, 0 failed, 0 skipped")

    def test_rejects_bad_job_count(self):
        with self.assertRaises(ValueError):
            BuildRunner(self.manifest, self.base, self.cache, jobs=0)


if __name__ == '__main__':
    unittest.main()
