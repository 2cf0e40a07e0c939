"""Unsupervised coastline detection from InSAR amplitude and coherence."""
from .raster import (BinaryMask, ComplexImage, RasterMeta, ScalarImage, read_raster, seeded_rng,
                     write_pgm, write_raster)

__version__ = "0.1.0"

__all__ = ["BinaryMask", "ComplexImage", "RasterMeta", "ScalarImage", "read_raster",
           "seeded_rng", "write_pgm", "write_raster"]
