# Container magics
TENSOR_MAGIC = b'FMC1'
ZVC_MAGIC = b'ZVC1'
ACTIVATION_MAGIC = b'DCM1'

# Header layouts (little-endian throughout)
TENSOR_HEADER_FORMAT = '<4sBB2s4Ifi'
TENSOR_HEADER_SIZE = 32
ZVC_HEADER_FORMAT = '<4sBBI'
ZVC_HEADER_SIZE = 10
ACTIVATION_HEADER_FORMAT = '<4sBBBBBBf4I'
ACTIVATION_HEADER_SIZE = 30

# FMC1 dtype byte
DTYPE_FLOAT32 = 0
DTYPE_CODES = 1
DTYPE_SIGNED_CODES = 2

# ZVC flags byte
ZVC_FLAG_SIGNED = 0x01
ZVC_FLAG_FLOAT32 = 0x02

# DCM1 method byte
METHOD_ZVC = 0
METHOD_DCT_CM = 1
METHOD_DCT_2D = 2
METHOD_ASP_ZVC = 3
METHOD_NAMES = {
    METHOD_ZVC: 'zvc',
    METHOD_DCT_CM: 'dct-cm',
    METHOD_DCT_2D: 'dct-2d',
    METHOD_ASP_ZVC: 'asp+zvc',
}

MIN_CODE_BITS = 1
MAX_CODE_BITS = 16
FLOAT_BITS = 32

SUPPORTED_PATCH_LENGTHS = (4, 8, 16)
DEFAULT_PATCH_LENGTH = 8
SPATIAL_PATCH = 8
MAX_STAGE = 255

# Per-stage low-frequency keep counts over an 8-long channel patch
MASK_PRESETS = {
    'm1': (8, (4, 6, 4, 2, 1)),
    'm2': (8, (2, 4, 3, 2, 1)),
}

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

# Parameter-table sweep (method configs only)
TABLE1_PRESET = [
    ('Low-bit 8-bit (baseline)', 'zvc:8'),
    ('Low-bit 5-bit', 'zvc:5'),
    ('DCT-2D 1', 'split:1:8:5'),
    ('DCT-2D 1 0.5ASP', 'split:1:8:5:0.5'),
    ('DCT-2D 1 & 2 blocks', 'split:2:8:5'),
    ('ASP 0.25', 'asp:0.25:8'),
    ('ASP 0.5', 'asp:0.5:8'),
    ('DCT-CM 10-bit M-1', 'dct-cm:m1:10'),
    ('DCT-CM 10-bit M-1 0.125', 'dct-cm:m1:10:0.125'),
    ('DCT-CM 8-bit M-1', 'dct-cm:m1:8'),
    ('DCT-CM 6-bit M-2', 'dct-cm:m2:6'),
]
