import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import jinja2

from services.codec_service import CodecService, reconstruction_error
from utils.config import Settings
from utils.exceptions import UsageError
from utils.helpers import log_status

TEMPLATE_FOLDER = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'templates')

_env = jinja2.Environment(loader=jinja2.FileSystemLoader(TEMPLATE_FOLDER), keep_trailing_newline=True)


@dataclass(frozen=True)
class StatsRow:
    method: str
    name: str
    stage: int
    block_id: int
    source: str
    elements: int
    nnz: int
    raw_bits: int
    compressed_bits: int
    reconstruction: Optional[Tuple[float, float]] = None

    @property
    def sparsity(self):
        return 1.0 - self.nnz / self.elements

    @property
    def ratio(self):
        return self.raw_bits / self.compressed_bits


@dataclass(frozen=True)
class MethodAggregate:
    method: str
    name: str
    total_ratio: float
    mean_sparsity: float


@dataclass
class StatsReport:
    rows: List[StatsRow] = field(default_factory=list)

    def methods(self):
        seen = []
        for row in self.rows:
            if (row.method, row.name) not in seen:
                seen.append((row.method, row.name))
        return seen

    def aggregates(self):
        """Total ratio is sum(raw_bits) / sum(compressed_bits) per method"""
        result = []
        for method, name in self.methods():
            rows = [row for row in self.rows if row.method == method and row.name == name]
            raw = sum(row.raw_bits for row in rows)
            compressed = sum(row.compressed_bits for row in rows)
            mean_sparsity = sum(row.sparsity for row in rows) / len(rows)
            result.append(MethodAggregate(method, name, raw / compressed, mean_sparsity))
        return result

    def machine_lines(self):
        lines = []
        for row in self.rows:
            line = (
                f"row method={row.method} name={_token(row.name)} stage={row.stage} block={row.block_id} "
                f"file={row.source} elements={row.elements} nnz={row.nnz} sparsity={row.sparsity:.6f} "
                f"raw_bits={row.raw_bits} compressed_bits={row.compressed_bits} ratio={row.ratio:.6f}"
            )
            if row.reconstruction is not None:
                max_abs, rel_l2 = row.reconstruction
                line += f" max_abs_err={max_abs:.9g} rel_l2_err={rel_l2:.9g}"
            lines.append(line)
        for agg in self.aggregates():
            lines.append(
                f"aggregate method={agg.method} name={_token(agg.name)} total_ratio={agg.total_ratio:.6f} "
                f"mean_sparsity={agg.mean_sparsity:.6f}"
            )
        return lines

    def render(self):
        sections = []
        for method, name in self.methods():
            rows = [row for row in self.rows if row.method == method and row.name == name]
            with_recon = any(row.reconstruction is not None for row in rows)
            headers = ['stage', 'block', 'elements', 'nnz', 'sparsity', 'raw_bits', 'comp_bits', 'ratio']
            if with_recon:
                headers += ['max_abs_err', 'rel_l2_err']
            cells = []
            for row in rows:
                line = [str(row.stage), str(row.block_id), str(row.elements), str(row.nnz),
                        f"{row.sparsity:.3f}", str(row.raw_bits), str(row.compressed_bits), f"{row.ratio:.3f}x"]
                if with_recon:
                    max_abs, rel_l2 = row.reconstruction or (float('nan'), float('nan'))
                    line += [f"{max_abs:.3g}", f"{rel_l2:.3g}"]
                cells.append(line)
            title = name if name == method else f"{name} [{method}]"
            sections.append(table_section(title, headers, cells))

        summary = [[agg.name, agg.method, f"{agg.total_ratio:.3f}x", f"{agg.mean_sparsity:.3f}"]
                   for agg in self.aggregates()]
        sections.append(table_section('summary', ['config', 'method', 'total_ratio', 'mean_sparsity'], summary))
        return render_sections(sections)


def _token(text):
    return text.replace(' ', '_')


def table_section(title, headers, rows):
    lines = [headers, ['-' * len(h) for h in headers]] + rows
    widths = [max(len(line[i]) for line in lines) for i in range(len(headers))]
    lines[1] = ['-' * width for width in widths]
    return {'title': title, 'lines': lines, 'widths': widths}


def render_sections(sections):
    return _env.get_template('report.txt.j2').render(sections=sections)


def assign_blocks(stages):
    """block_id counts earlier inputs that share a stage"""
    counts = {}
    blocks = []
    for stage in stages:
        blocks.append(counts.get(stage, 0))
        counts[stage] = counts.get(stage, 0) + 1
    return blocks


class StatsService:
    def __init__(self, settings=None, codec=None):
        self.settings = settings or Settings()
        self.codec = codec or CodecService(self.settings)

    def _row(self, name, config, source, stage, block, tensor, reference):
        a = self.codec.compress(tensor, config, stage)
        reconstruction = None
        if reference is not None:
            reconstruction = reconstruction_error(reference, self.codec.decompress(a, dequantize_codes=True))
        return StatsRow(
            method=config.label,
            name=name,
            stage=stage,
            block_id=block,
            source=source,
            elements=a.payload.count,
            nnz=a.payload.nnz,
            raw_bits=a.elements * self.settings.raw_bits,
            compressed_bits=8 * len(a.payload),
            reconstruction=reconstruction,
        )

    def build_report(self, inputs, configs, references=None):
        """inputs: (source, stage, Tensor); configs: (name, MethodConfig)"""
        inputs = list(inputs)
        if references is not None:
            if len(references) != len(inputs):
                raise UsageError(f"{len(references)} reference tensor(s) given for {len(inputs)} input(s)")
            for (source, _, tensor), reference in zip(inputs, references):
                if reference.dims != tensor.dims:
                    raise UsageError(f"reference dims {reference.dims} do not match {source} dims {tensor.dims}")
        else:
            references = [None] * len(inputs)

        blocks = assign_blocks([stage for _, stage, _ in inputs])
        report = StatsReport()
        for name, config in configs:
            log_status(f"Measuring {name} over {len(inputs)} tensor(s)", '📊')
            jobs = [
                (name, config, source, stage, block, tensor, reference)
                for (source, stage, tensor), block, reference in zip(inputs, blocks, references)
            ]
            if self.settings.workers > 1:
                with ThreadPoolExecutor(max_workers=self.settings.workers) as pool:
                    report.rows.extend(pool.map(lambda job: self._row(*job), jobs))
            else:
                report.rows.extend(self._row(*job) for job in jobs)
        return report
