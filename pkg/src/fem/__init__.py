from .mesh import CellVectorField, Mesh, NodalField, build_uniform_rect_mesh, interpolate
from .exponent import VariableExponent, luxemburg_norm, modular, w1p_norm
from .dc_solver import DCConfig, DCResult, DCSolver, dc_iterate

__all__ = [
    'Mesh', 'NodalField', 'CellVectorField', 'build_uniform_rect_mesh', 'interpolate',
    'VariableExponent', 'modular', 'luxemburg_norm', 'w1p_norm',
    'DCConfig', 'DCResult', 'DCSolver', 'dc_iterate',
]
