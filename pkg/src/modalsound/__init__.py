"""Voxel modal sound synthesis: vibration, radiation, and audio rendering.

Submodules are imported lazily so the command-line frontend can configure
BLAS thread counts before numpy loads.
"""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    # errors
    "InputError": "errors", "MeshError": "errors", "ResolutionError": "errors",
    "NumericalError": "errors",
    # surface meshes
    "TriangleMesh": "mesh", "load_mesh": "mesh", "load_stl": "mesh",
    "load_obj": "mesh", "save_stl": "mesh", "box_mesh": "mesh",
    "uv_sphere_mesh": "mesh", "is_watertight": "mesh",
    "boundary_edge_count": "mesh",
    # voxel grids
    "VoxelGrid": "voxgrid", "voxelize": "voxgrid", "grid_from_coords": "voxgrid",
    "connected_components": "voxgrid", "surface_exposure": "voxgrid",
    "vertex_to_voxel": "voxgrid", "voxel_to_vertex": "voxgrid",
    "save_vgrid": "voxgrid", "load_vgrid": "voxgrid", "CORNER_OFFSETS": "voxgrid",
    # finite elements
    "Material": "hexfem", "load_material": "hexfem", "builtin_materials": "hexfem",
    "element_matrices": "hexfem", "assemble": "hexfem", "AssembledSystem": "hexfem",
    "rescale_eigendata": "hexfem", "save_spmat": "hexfem", "load_spmat": "hexfem",
    # stencil form of the assembled operators
    "ConvKernel": "convequiv", "kernel_from_element": "convequiv",
    "sparse_conv_apply": "convequiv", "equivalence_error": "convequiv",
    "NEIGHBOR_OFFSETS": "convequiv",
    # eigensolver stack
    "svqb": "eigensolve", "rayleigh_ritz": "eigensolve",
    "residual_error": "eigensolve", "residual_errors": "eigensolve",
    "pencil_norms": "eigensolve", "matrix_norm_estimate": "eigensolve",
    "krylov_warmstart": "eigensolve", "dense_oracle": "eigensolve",
    "rigid_modes": "eigensolve", "lobpcg": "eigensolve", "mixed_solve": "eigensolve",
    "ModeSet": "eigensolve", "SolveReport": "eigensolve",
    "SubspaceBasis": "eigensolve", "ConvergenceError": "eigensolve",
    "RandomStart": "eigensolve", "KrylovStart": "eigensolve",
    "FileStart": "eigensolve", "mel": "eigensolve", "freq_error": "eigensolve",
    "mean_residual_error": "eigensolve", "save_modes": "eigensolve",
    "load_modes": "eigensolve",
    # exterior acoustics
    "HelmholtzContext": "radiation", "BemSurface": "radiation",
    "build_surface": "radiation", "neumann_from_mode": "radiation",
    "assemble_cbie": "radiation", "CbieSystem": "radiation",
    "solve_surface_pressure": "radiation", "evaluate_potential": "radiation",
    "save_bemout": "radiation", "load_bemout": "radiation",
    "SOUND_SPEED_DEFAULT": "radiation", "AIR_DENSITY_DEFAULT": "radiation",
    # transfer maps
    "FFATMap": "ffat", "SamplePattern": "ffat", "sample_pattern": "ffat",
    "fit_ffat": "ffat", "scale_ffat": "ffat", "query": "ffat",
    "mel_normalize_frequency": "ffat", "save_ffat": "ffat", "load_ffat": "ffat",
    "ffat_to_png": "ffat", "N_THETA": "ffat", "N_PHI": "ffat",
    # synthesis
    "ForceEvent": "synth", "ListenerConfig": "synth", "AudioBuffer": "synth",
    "project_impulse": "synth", "render": "synth", "wav_export": "synth",
    "wav_read": "synth", "load_events": "synth", "save_events": "synth",
    # procedural shapes and benchmark
    "gen_shape": "shapes", "SHAPE_KINDS": "shapes",
    "BenchConfig": "bench", "BenchRow": "bench", "BenchReport": "bench",
    "bench_vibration": "bench", "DEFAULT_CONFIGS": "bench", "DEFAULT_TOLS": "bench",
    # end-to-end
    "PipelineResult": "pipeline", "run_pipeline": "pipeline",
    "radiate_mode": "pipeline", "default_tap_event": "pipeline",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    try:
        module = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    value = getattr(import_module(f".{module}", __name__), name)
    globals()[name] = value
    return value


def __dir__():
    return __all__
