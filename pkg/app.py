import os
import sys

import click

from services.codec_service import CodecService, MethodConfig
from services.container_service import read_activation, write_activation
from services.dct2d_service import load_qmatrix
from services.dctcm_service import MaskSchedule, fuse_weight_tensor
from services.stats_service import StatsService, render_sections, table_section
from services.tensor_service import Spectrum, SyntheticProfile, generate_synthetic, read_tensor, write_tensor
from services.zvc_service import compression_ratio
from utils.config import load_settings
from utils.constants import EXIT_DATA, EXIT_OK, EXIT_USAGE, FLOAT_BITS, TABLE1_PRESET
from utils.exceptions import CodecError, ConfigError, DomainError, UnsupportedError, UsageError
from utils.helpers import log_status, parse_float_list, parse_int_list, set_verbose
from utils.models import Tensor

COMPRESS_METHODS = ['zvc', 'zvc-f32', 'asp', 'dct-cm', 'dct-2d']


def _stage_shapes(shapes, stages):
    """One shape follows a ResNet-like progression; one per stage is used as given"""
    parsed = []
    for text in shapes:
        values = parse_int_list(text)
        if len(values) != 3:
            raise UsageError(f"--shape expects c,h,w, got '{text}'")
        parsed.append(tuple(values))
    if len(parsed) == stages:
        return parsed
    if len(parsed) != 1:
        raise UsageError(f"give --shape once or once per stage ({stages}), got {len(parsed)}")
    c, h, w = parsed[0]
    return [(c * 2 ** s, max(1, h // 2 ** s), max(1, w // 2 ** s)) for s in range(stages)]


def _print_summary(title, pairs):
    """Human table plus key=value lines carrying the same values"""
    headers = [key for key, _ in pairs]
    values = [str(value) for _, value in pairs]
    click.echo(render_sections([table_section(title, headers, [values])]), nl=False)
    for key, value in pairs:
        click.echo(f"{key}={value}")


@click.group()
@click.option('--quiet', is_flag=True, help='Suppress status lines on stderr.')
@click.pass_context
def cli(ctx, quiet):
    """Feature-map codecs: ZVC, DCT-CM, 2-D DCT, ASP and weight fusion."""
    settings = load_settings()
    set_verbose(settings.verbose and not quiet)
    ctx.obj = settings


@cli.command()
@click.option('--shape', 'shapes', multiple=True, default=('8,16,16',), show_default=True,
              help='c,h,w of stage 0, or one per stage.')
@click.option('--stages', type=click.IntRange(min=1), default=5, show_default=True)
@click.option('--sparsity', default='0.4,0.5,0.6,0.7,0.8', show_default=True,
              help='Target zero fraction, one value or one per stage.')
@click.option('--spectrum', default='flat', show_default=True, help='flat or lowpass(k).')
@click.option('--seed', type=click.IntRange(min=0, max=2 ** 64 - 1), default=0, show_default=True)
@click.option('--out-dir', required=True, type=click.Path(file_okay=False))
def gen(shapes, stages, sparsity, spectrum, seed, out_dir):
    """Write one synthetic FMC1 tensor per stage."""
    try:
        targets = parse_float_list(sparsity)
    except ValueError as e:
        raise UsageError(str(e))
    if len(targets) == 1:
        targets = targets * stages
    if len(targets) != stages:
        raise UsageError(f"--sparsity needs 1 or {stages} values, got {len(targets)}")

    try:
        profile = SyntheticProfile(_stage_shapes(shapes, stages), targets, Spectrum.parse(spectrum), seed)
    except (DomainError, ValueError) as e:
        raise UsageError(f"invalid generator flags: {str(e)}")
    os.makedirs(out_dir, exist_ok=True)

    for index, tensor in generate_synthetic(profile):
        path = os.path.join(out_dir, f"stage_{index}.fmc")
        write_tensor(tensor, path)
        dims = ','.join(str(d) for d in tensor.dims)
        click.echo(f"file={path} stage={index} dims={dims} sparsity={tensor.sparsity:.6f} spectrum={profile.spectrum}")
    log_status(f"Wrote {stages} tensor file(s) to {out_dir}")


@cli.command()
@click.argument('input_path', type=click.Path(exists=True, dir_okay=False))
@click.option('-o', '--output', required=True, type=click.Path(dir_okay=False))
@click.option('--method', type=click.Choice(COMPRESS_METHODS), required=True)
@click.option('--mask', default='m1', show_default=True, help='m1, m2 or k0,k1,.../n')
@click.option('--stage', type=click.IntRange(0, 255), default=0, show_default=True)
@click.option('--bits', type=click.IntRange(1, 16), default=None, help='Code width (default FMC_DEFAULT_BITS).')
@click.option('--asp-threshold', type=click.FloatRange(min=0), default=0.0, show_default=True,
              help='ASP threshold in real units; 0 disables.')
@click.option('--qmatrix', type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_obj
def compress(settings, input_path, output, method, mask, stage, bits, asp_threshold, qmatrix):
    """Compress an FMC1 tensor into a DCM1 container."""
    bits = bits or settings.default_bits
    if method == 'zvc-f32':
        method, bits = 'zvc', FLOAT_BITS
    if method == 'zvc' and asp_threshold > 0:
        method = 'asp'
    try:
        schedule = MaskSchedule.parse(mask) if method == 'dct-cm' else None
    except (DomainError, UnsupportedError) as e:
        raise UsageError(f"invalid --mask: {str(e)}")
    config = MethodConfig(method, bits, asp_threshold, schedule)

    tensor = read_tensor(input_path)
    codec = CodecService(settings, load_qmatrix(qmatrix) if qmatrix else None)
    log_status(f"Compressing {input_path} with {config.label}", '🚀')
    activation = codec.compress(tensor, config, stage)
    container_bytes = write_activation(activation, output)

    payload = activation.payload
    raw_bits = activation.elements * settings.raw_bits
    if payload.count == activation.elements:
        ratio = compression_ratio(activation.elements, settings.raw_bits, payload)
    else:
        ratio = raw_bits / (8 * len(payload))
    if ratio < 1.0:
        log_status(f"Stream is larger than the {settings.raw_bits}-bit raw payload (ratio {ratio:.3f})", '⚠️')

    _print_summary('compress', [
        ('method', activation.method_name),
        ('config', config.label),
        ('stage', stage),
        ('elements', activation.elements),
        ('payload_elements', payload.count),
        ('nnz', payload.nnz),
        ('sparsity', f"{1 - payload.nnz / payload.count:.6f}"),
        ('raw_bits', raw_bits),
        ('stream_bytes', len(payload)),
        ('container_bytes', container_bytes),
        ('ratio', f"{ratio:.6f}"),
    ])
    log_status(f"Wrote {output}")


@cli.command()
@click.argument('input_path', type=click.Path(exists=True, dir_okay=False))
@click.option('-o', '--output', required=True, type=click.Path(dir_okay=False))
@click.option('--qmatrix', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Quantization matrix used when the dct-2d payload was made.')
@click.option('--dequantize', 'dequantize_codes', is_flag=True, help='Write reals instead of integer codes.')
@click.pass_obj
def decompress(settings, input_path, output, qmatrix, dequantize_codes):
    """Reconstruct an FMC1 tensor from a DCM1 container."""
    activation = read_activation(input_path)
    codec = CodecService(settings, load_qmatrix(qmatrix) if qmatrix else None)
    tensor = codec.decompress(activation, dequantize_codes)
    size = write_tensor(tensor, output)
    _print_summary('decompress', [
        ('method', activation.method_name),
        ('dims', ','.join(str(d) for d in tensor.dims)),
        ('quantized', int(tensor.is_quantized)),
        ('bytes', size),
    ])
    log_status(f"Wrote {output}")


@cli.command()
@click.argument('inputs', nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option('--methods', default=None, help="';'-separated method configs, e.g. 'zvc;asp:0.25;dct-cm:m1:8'.")
@click.option('--preset', type=click.Choice(['table1']), default=None, help='Run the parameter-table sweep.')
@click.option('--stages', 'stage_list', default=None, help='Comma-separated stage per input (default: position).')
@click.option('--ref', 'refs', multiple=True, type=click.Path(exists=True, dir_okay=False),
              help='Reference tensor per input for reconstruction error.')
@click.option('--qmatrix', type=click.Path(exists=True, dir_okay=False), default=None)
@click.pass_obj
def stats(settings, inputs, methods, preset, stage_list, refs, qmatrix):
    """Per-block NNZ, sparsity and compression ratio over a corpus."""
    configs = []
    if preset == 'table1':
        configs += [(name, MethodConfig.parse(text, settings.default_bits)) for name, text in TABLE1_PRESET]
    if methods:
        for text in methods.split(';'):
            if text.strip():
                config = MethodConfig.parse(text, settings.default_bits)
                configs.append((config.label, config))
    if not configs:
        configs = [('zvc', MethodConfig('zvc', settings.default_bits))]

    if stage_list:
        try:
            stages = parse_int_list(stage_list)
        except ValueError as e:
            raise UsageError(str(e))
        if len(stages) != len(inputs):
            raise UsageError(f"--stages lists {len(stages)} stage(s) for {len(inputs)} input(s)")
    else:
        stages = list(range(len(inputs)))

    tensors = [(path, stage, read_tensor(path)) for path, stage in zip(inputs, stages)]
    references = [read_tensor(path) for path in refs] if refs else None

    service = StatsService(settings, CodecService(settings, load_qmatrix(qmatrix) if qmatrix else None))
    report = service.build_report(tensors, configs, references)
    click.echo(report.render(), nl=False)
    for line in report.machine_lines():
        click.echo(line)


@cli.command('fuse-weights')
@click.argument('input_path', type=click.Path(exists=True, dir_okay=False))
@click.option('-o', '--output', required=True, type=click.Path(dir_okay=False))
@click.option('--seed', type=click.IntRange(min=0), default=0, show_default=True, help='Probe vector seed.')
def fuse_weights_cmd(input_path, output, seed):
    """Fold the inverse DCT into a (C_out, n, 1, 1) weight block: W* = W A^T."""
    weights = read_tensor(input_path)
    fused, residual = fuse_weight_tensor(weights, seed)
    write_tensor(Tensor((fused.c_out, fused.n, 1, 1), fused.w), output)
    _print_summary('fuse-weights', [
        ('c_out', fused.c_out),
        ('n', fused.n),
        ('probe_residual', f"{residual:.3e}"),
    ])
    log_status(f"Wrote {output}")


def run(argv=None):
    """Run the CLI and return its exit code: 0 ok, 1 usage, 2 format/data"""
    try:
        cli.main(args=argv, prog_name='fmc', standalone_mode=False)
        return EXIT_OK
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.exceptions.Abort:
        click.echo('Aborted!', err=True)
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except (UsageError, ConfigError) as e:
        click.echo(f"❌ Usage error: {str(e)}", err=True)
        return EXIT_USAGE
    except CodecError as e:
        click.echo(f"❌ {type(e).__name__}: {str(e)}", err=True)
        return EXIT_DATA
    except OSError as e:
        click.echo(f"❌ I/O error: {str(e)}", err=True)
        return EXIT_DATA


if __name__ == '__main__':
    sys.exit(run())
