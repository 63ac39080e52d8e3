import logging
import threading
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Set

from metricmux.afm import MapLine, afm_to_metrics, emit_map_line, parse_afm
from metricmux.cache import CacheStore, step_fingerprint
from metricmux.compose import compose, load_plan
from metricmux.encodings import names_vector, read_enc
from metricmux.errors import MissingInput, PipelineError, StepFailed
from metricmux.manifest import Manifest, Step
from metricmux.metrics import FontMetrics
from metricmux.optical import ew_metrics, parse_params, unslant
from metricmux.pl import CharcodeFormat, emit_pl, parse_pl
from metricmux.tfm import emit_tfm, parse_tfm
from metricmux.utils import bytes_digest, file_digest, write_atomic
from metricmux.vf import emit_vf, emit_vpl, parse_vf, parse_vpl

logger = logging.getLogger(__name__)

METRIC_INPUTS = (".tfm", ".pl", ".afm")


def load_metrics(path: Path, enc: Optional[Path] = None, design=10) -> FontMetrics:
    """Metrics from a .tfm, .pl or (converted) .afm file."""
    suffix = path.suffix.lower()
    if suffix == ".tfm":
        return parse_tfm(path.read_bytes())
    if suffix == ".pl":
        return parse_pl(path.read_text(encoding="latin-1"))
    if suffix == ".afm":
        reenc = read_enc(enc) if enc is not None else None
        return afm_to_metrics(parse_afm(path.read_text(encoding="latin-1")), reenc, design).metrics
    raise PipelineError(f"{path.name}: cannot read metrics from a {suffix or 'bare'} file")


def dump_metrics(path: str, m: FontMetrics, fmt: str = "default", names=None) -> bytes:
    if path.lower().endswith(".pl"):
        return emit_pl(m, CharcodeFormat(fmt), names).encode("latin-1")
    return emit_tfm(m)


class StepWorker:
    """Runs one manifest step in memory and returns the bytes of its outputs."""

    def __init__(self, step: Step, base_dir: Path):
        self.step = step
        self.base_dir = Path(base_dir)

    def path(self, name: str) -> Path:
        return self.base_dir / name

    def option_path(self, key: str) -> Optional[Path]:
        value = self.step.options.get(key)
        return self.path(value) if value else None

    def input_with(self, *suffixes: str) -> Path:
        for name in self.step.inputs:
            if name.lower().endswith(suffixes):
                return self.path(name)
        raise PipelineError(f"{self.step.name}: no {'/'.join(suffixes)} input")

    def output_with(self, *suffixes: str, required: bool = True) -> Optional[str]:
        for name in self.step.outputs:
            if name.lower().endswith(suffixes):
                return name
        if required:
            raise PipelineError(f"{self.step.name}: no {'/'.join(suffixes)} output")
        return None

    def run(self) -> Dict[str, bytes]:
        op = self.step.op
        if op == 'tftopl':
            return self.tftopl()
        elif op == 'pltotf':
            return self.pltotf()
        elif op == 'vptovf':
            return self.vptovf()
        elif op == 'vftovp':
            return self.vftovp()
        elif op == 'afm2tfm':
            return self.afm2tfm()
        elif op == 'compose':
            return self.compose()
        elif op in ('ew', 'ew2'):
            return self.optical(2 if op == 'ew2' else 1)
        elif op == 'unslant':
            return self.unslant()
        elif op == 'map':
            return self.map_line()
        raise PipelineError(f"{self.step.name}: op {op} does not run in process")

    def _design(self):
        return self.step.options.get("design", "10")

    def _format(self) -> str:
        return self.step.options.get("charcode-format", "default")

    def tftopl(self) -> Dict[str, bytes]:
        m = parse_tfm(self.input_with(".tfm").read_bytes())
        fmt = self._format()
        names = None
        if fmt == "names":
            enc = self.option_path("enc")
            if enc is None:
                raise PipelineError(f"{self.step.name}: charcode-format names needs 'enc'")
            names = names_vector(m.coding_scheme, enc)
        return {self.output_with(".pl"): dump_metrics(".pl", m, fmt, names)}

    def pltotf(self) -> Dict[str, bytes]:
        m = parse_pl(self.input_with(".pl").read_text(encoding="latin-1"))
        return {self.output_with(".tfm"): emit_tfm(m)}

    def vptovf(self) -> Dict[str, bytes]:
        v, m = parse_vpl(self.input_with(".vpl").read_text(encoding="latin-1"))
        outputs = {self.output_with(".vf"): emit_vf(v)}
        tfm = self.output_with(".tfm", required=False)
        if tfm:
            outputs[tfm] = emit_tfm(m)
        return outputs

    def vftovp(self) -> Dict[str, bytes]:
        v = parse_vf(self.input_with(".vf").read_bytes())
        m = parse_tfm(self.input_with(".tfm").read_bytes())
        text = emit_vpl(v, m, CharcodeFormat(self._format()))
        return {self.output_with(".vpl"): text.encode("latin-1")}

    def _conversion(self):
        afm = parse_afm(self.input_with(".afm").read_text(encoding="latin-1"))
        enc = self.option_path("enc")
        reenc = read_enc(enc) if enc is not None else None
        tfm_out = self.output_with(".tfm", required=False)
        tfm_name = self.step.options.get("tfm") or (Path(tfm_out).stem if tfm_out else None)
        return afm_to_metrics(
            afm, reenc, self._design(),
            tfm_name=tfm_name,
            enc_file=Path(self.step.options["enc"]).name if enc is not None else None,
            pfb_file=self.step.options.get("pfb"),
            vpl=self.output_with(".vpl", required=False) is not None,
            vpl_format=CharcodeFormat(self._format()),
        )

    def afm2tfm(self) -> Dict[str, bytes]:
        result = self._conversion()
        outputs = {self.output_with(".tfm"): emit_tfm(result.metrics)}
        vpl = self.output_with(".vpl", required=False)
        if vpl:
            outputs[vpl] = result.vpl.text().encode("latin-1")
        map_file = self.output_with(".map", required=False)
        if map_file:
            outputs[map_file] = (emit_map_line(result.map_line) + "\n").encode("latin-1")
        return outputs

    def map_line(self) -> Dict[str, bytes]:
        line: MapLine = self._conversion().map_line
        return {self.output_with(".map"): (emit_map_line(line) + "\n").encode("latin-1")}

    def compose(self) -> Dict[str, bytes]:
        plan_path = self.option_path("plan")
        if plan_path is None:
            raise PipelineError(f"{self.step.name}: compose needs 'plan'")
        plan = load_plan(plan_path.read_text(encoding="utf-8"))
        sources = {}
        for name in plan.font_names():
            source = self.path(plan.fonts.get(name, name + ".tfm"))
            sources[name] = load_metrics(source)
        v, m = compose(plan, sources)
        outputs = {self.output_with(".vf"): emit_vf(v)}
        tfm = self.output_with(".tfm", required=False)
        if tfm:
            outputs[tfm] = emit_tfm(m)
        vpl = self.output_with(".vpl", required=False)
        if vpl:
            outputs[vpl] = emit_vpl(v, m).encode("latin-1")
        return outputs

    def _source_metrics(self) -> FontMetrics:
        return load_metrics(self.input_with(*METRIC_INPUTS), self.option_path("enc"), self._design())

    def optical(self, iterations: int) -> Dict[str, bytes]:
        params = parse_params(self.step.options.get("params", ""))
        m = self._source_metrics()
        for _ in range(iterations):
            m = ew_metrics(m, params)
        out = self.output_with(".tfm", ".pl")
        return {out: dump_metrics(out, m, self._format())}

    def unslant(self) -> Dict[str, bytes]:
        m = unslant(self._source_metrics())
        out = self.output_with(".tfm", ".pl")
        return {out: dump_metrics(out, m, self._format())}


@dataclass
class BuildReport:
    total: int = 0
    executed: List[str] = field(default_factory=list)
    cached: List[str] = field(default_factory=list)
    external: List[str] = field(default_factory=list)
    planned: List[str] = field(default_factory=list)
    failed: Dict[str, str] = field(default_factory=dict)
    skipped: List[str] = field(default_factory=list)
    mismatches: List[str] = field(default_factory=list)
    statuses: Dict[int, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failed and not self.skipped and not self.mismatches

    def lines(self, manifest: Manifest) -> List[str]:
        out = []
        for position, index in enumerate(manifest.order, start=1):
            step = manifest.step(index)
            status = self.statuses.get(index, "pending")
            out.append(f"({position}/{len(manifest)}) {step.label}: {status}")
        out.append(
            f"{len(self.executed)} executed, {len(self.cached)} cached, "
            f"{len(self.external)} external, {len(self.failed)} failed, {len(self.skipped)} skipped"
        )
        if self.mismatches:
            out.append("digest mismatches: " + ", ".join(self.mismatches))
        return out


class BuildRunner:
    def __init__(self, manifest: Manifest, base_dir, cache_dir, jobs: int = 1,
                 dry_run: bool = False, verify: bool = False,
                 status_callback: Optional[Callable[[str], None]] = None):
        if jobs < 1:
            raise ValueError("jobs must be a positive integer")
        self.manifest = manifest
        self.base_dir = Path(base_dir)
        self.cache = CacheStore(cache_dir)
        self.jobs = jobs
        self.dry_run = dry_run
        self.verify = verify
        self.status_callback = status_callback
        self.report = BuildReport(total=len(manifest))
        self._lock = threading.Lock()
        self._position = {index: n for n, index in enumerate(manifest.order, start=1)}

    def _status(self, step: Step, status: str):
        message = f"({self._position[step.index]}/{len(self.manifest)}) {step.label}: {status}"
        with self._lock:
            self.report.statuses[step.index] = status
        if status.startswith("failed"):
            logger.error(message)
        else:
            logger.info(message)
        if self.status_callback is not None:
            self.status_callback(message)

    def run(self) -> BuildReport:
        if self.dry_run:
            for step in self.manifest.ordered():
                self.report.planned.append(step.name)
                note = " (assumed)" if step.assumed else ""
                self._status(step, f"planned {' '.join(step.inputs) or '-'} -> "
                                   f"{' '.join(step.outputs)}{note}")
            return self.report

        missing = [p for p in self.manifest.root_inputs() if not (self.base_dir / p).exists()]
        if missing:
            raise MissingInput("missing root inputs: " + ", ".join(missing))

        done: Set[int] = set()
        blocked: Set[int] = set()
        running: Dict[Future, Step] = {}
        waiting = list(self.manifest.order)
        with ThreadPoolExecutor(max_workers=self.jobs) as pool:
            while waiting or running:
                for index in list(waiting):
                    deps = self.manifest.depends_on[index]
                    step = self.manifest.step(index)
                    if deps & blocked:
                        waiting.remove(index)
                        blocked.add(index)
                        self.report.skipped.append(step.name)
                        self._status(step, "skipped")
                    elif deps <= done and len(running) < self.jobs:
                        waiting.remove(index)
                        running[pool.submit(self._run_step, step)] = step
                if not running:
                    continue
                finished, _ = wait(running, return_when=FIRST_COMPLETED)
                for future in sorted(finished, key=lambda f: running[f].index):
                    step = running.pop(future)
                    error = future.exception()
                    if error is None:
                        done.add(step.index)
                        continue
                    failure = error if isinstance(error, StepFailed) else StepFailed(step.name, error)
                    self.report.failed[step.name] = str(failure.cause)
                    blocked.add(step.index)
                    self._status(step, f"failed: {failure.cause}")

        for key in ("executed", "cached", "external", "skipped"):
            getattr(self.report, key).sort(key=self._index_of)
        return self.report

    def _index_of(self, name: str) -> int:
        for step in self.manifest.steps:
            if step.name == name:
                return step.index
        return 0

    def _record(self, bucket: str, step: Step):
        with self._lock:
            getattr(self.report, bucket).append(step.name)

    def _run_step(self, step: Step):
        if step.op == "external":
            missing = [p for p in step.outputs if not (self.base_dir / p).exists()]
            if missing:
                raise StepFailed(step.name, MissingInput(
                    "expected pre-existing files: " + ", ".join(missing)))
            self._record("external", step)
            self._status(step, "external")
            return

        digests = {}
        for path in step.inputs:
            full = self.base_dir / path
            if not full.is_file():
                raise StepFailed(step.name, MissingInput(f"{path} does not exist"))
            digests[path] = file_digest(full)
        fingerprint = step_fingerprint(step, digests)
        entry = self.cache.lookup(fingerprint)

        if entry is not None and not self.verify:
            self.cache.restore(entry, self.base_dir)
            self._record("cached", step)
            self._status(step, "cached")
            return

        try:
            outputs = StepWorker(step, self.base_dir).run()
        except Exception as e:
            raise StepFailed(step.name, e) from e

        if entry is not None:
            fresh = {path: bytes_digest(data) for path, data in outputs.items()}
            if fresh != entry.outputs:
                with self._lock:
                    self.report.mismatches.append(step.name)
                logger.error("%s: cached outputs differ from a fresh run", step.name)
            for path, data in outputs.items():
                write_atomic(self.base_dir / path, data)
            self._record("cached", step)
            self._status(step, "cached (verified)")
            return

        for path, data in outputs.items():
            write_atomic(self.base_dir / path, data)
        self.cache.store(fingerprint, outputs)
        self._record("executed", step)
        self._status(step, "executed")


def run(manifest: Manifest, base_dir, cache_dir, jobs: int = 1, dry_run: bool = False,
        verify: bool = False) -> BuildReport:
    return BuildRunner(manifest, base_dir, cache_dir, jobs, dry_run, verify).run()
