import numpy as np
import pytest

from helpers import sparse_codes, sparse_reals
from services.codec_service import MethodConfig
from services.stats_service import StatsReport, StatsRow, StatsService, assign_blocks, table_section, render_sections
from utils.config import Settings
from utils.exceptions import UsageError
from utils.models import Tensor


def _inputs():
    return [
        ('a.fmc', 0, sparse_codes((1, 16, 16, 16), 1638)),
        ('b.fmc', 1, Tensor((1, 8, 4, 4), np.zeros(128))),
    ]


def test_rows_per_input_and_method():
    report = StatsService(Settings()).build_report(_inputs(), [('zvc', MethodConfig('zvc', 8))])
    first, second = report.rows

    assert (first.elements, first.nnz, first.raw_bits) == (4096, 1638, 32768)
    assert first.ratio == pytest.approx(1.896, abs=1e-3)
    assert second.nnz == 0 and second.sparsity == 1.0
    assert second.compressed_bits == 8 * (10 + 16)


def test_aggregate_is_pooled_ratio():
    report = StatsService(Settings()).build_report(_inputs(), [('zvc', MethodConfig('zvc', 8))])
    agg, = report.aggregates()
    raw = sum(row.raw_bits for row in report.rows)
    compressed = sum(row.compressed_bits for row in report.rows)
    assert agg.total_ratio == pytest.approx(raw / compressed)
    assert agg.mean_sparsity == pytest.approx(np.mean([row.sparsity for row in report.rows]))


def test_raw_bits_follow_settings():
    report = StatsService(Settings(raw_bits=32)).build_report(_inputs()[:1], [('zvc', MethodConfig('zvc', 8))])
    assert report.rows[0].raw_bits == 4096 * 32


def test_references_add_reconstruction_error():
    x = sparse_reals((1, 8, 4, 4), 0.5)
    report = StatsService().build_report([('x', 0, x)], [('d', MethodConfig.parse('dct-cm:m1:8'))], [x])
    max_abs, rel_l2 = report.rows[0].reconstruction
    assert 0 <= rel_l2 < 1
    assert 'max_abs_err=' in report.machine_lines()[0]


def test_reference_mismatches():
    service = StatsService()
    with pytest.raises(UsageError):
        service.build_report(_inputs(), [('zvc', MethodConfig('zvc', 8))], [_inputs()[0][2]])
    with pytest.raises(UsageError):
        service.build_report(_inputs()[:1], [('zvc', MethodConfig('zvc', 8))], [_inputs()[1][2]])


def test_low_bit_rows_differ_on_code_inputs():
    configs = [('zvc:8', MethodConfig.parse('zvc:8')), ('zvc:5', MethodConfig.parse('zvc:5'))]
    report = StatsService(Settings()).build_report(_inputs()[:1], configs)
    eight, five = report.rows
    assert five.compressed_bits < eight.compressed_bits
    assert five.ratio > eight.ratio


def test_float32_rows_are_lossless():
    x = sparse_reals((1, 8, 4, 4), 0.5)
    report = StatsService().build_report([('x', 0, x)], [('f32', MethodConfig.parse('zvc:f32'))], [x])
    row, = report.rows
    assert row.reconstruction[0] <= float(np.max(np.abs(x.data))) * 2 ** -24
    assert row.compressed_bits == 8 * (10 + 16 + 4 * row.nnz)


def test_worker_pool_keeps_row_order():
    configs = [('zvc', MethodConfig('zvc', 8)), ('asp', MethodConfig('asp', 8, 0.5))]
    inputs = [(f"s{i}", i, sparse_reals((1, 8, 4, 4), 0.3, seed=i)) for i in range(6)]
    serial = StatsService(Settings()).build_report(inputs, configs)
    pooled = StatsService(Settings(workers=3)).build_report(inputs, configs)
    assert pooled.rows == serial.rows


def test_machine_lines_and_render():
    report = StatsReport([
        StatsRow('zvc:8', 'low bit', 0, 0, 'a.fmc', 64, 16, 512, 256),
        StatsRow('zvc:8', 'low bit', 1, 0, 'b.fmc', 64, 32, 512, 512),
    ])
    lines = report.machine_lines()
    assert lines[0] == ('row method=zvc:8 name=low_bit stage=0 block=0 file=a.fmc elements=64 nnz=16 '
                        'sparsity=0.750000 raw_bits=512 compressed_bits=256 ratio=2.000000')
    assert lines[-1] == 'aggregate method=zvc:8 name=low_bit total_ratio=1.333333 mean_sparsity=0.625000'

    text = report.render()
    assert 'low bit [zvc:8]' in text
    assert 'summary' in text
    assert '1.333x' in text


def test_assign_blocks():
    assert assign_blocks([0, 1, 1, 0, 1]) == [0, 0, 1, 1, 2]


def test_table_section_pads_columns():
    text = render_sections([table_section('t', ['a', 'bb'], [['100', '2']])])
    assert '  a  bb' in text
    assert '100   2' in text
