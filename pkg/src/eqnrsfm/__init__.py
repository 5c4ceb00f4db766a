"""Convex conic relaxations for non-rigid structure-from-motion.

Reconstructs deforming 3D geometry from monocular point correspondences by
lifting isometric (geodesic-preserving) and equiareal (area-preserving)
deformation constraints into small semidefinite programs, solved by an
embedded symmetric-cone interior-point method.

Subpackage map:

* :mod:`eqnrsfm.geometry`   — sightlines, distances, triangle-area quartics
* :mod:`eqnrsfm.graph`      — kNN 1-simplices, triangle enumeration, lift slots
* :mod:`eqnrsfm.lifting`    — Gram-matrix layouts and linear functionals
* :mod:`eqnrsfm.conic`      — conic program IR, reformulations, solver
* :mod:`eqnrsfm.reconstruct`— the seven reconstruction programs + extraction
* :mod:`eqnrsfm.synth`      — isometric / quasi-equiareal generators, LM
* :mod:`eqnrsfm.eval`       — scale alignment, RMS/MED, gE/aE deviations
* :mod:`eqnrsfm.cli`        — batch driver over JSON/PLY/CSV files
"""

__version__ = "0.1.0"
