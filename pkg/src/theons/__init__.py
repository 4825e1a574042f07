"""Exchangeable random structures from measurable membership sets.

A theon assigns each predicate symbol a membership set over per-subset
weights and random orders.  Sampling a point and reading off memberships
gives a random structure on any finite vertex set; the library samples
these, computes their densities (exactly on chamber grids), strips or
simulates the order variables, and tests low-arity quasirandomness.
"""

from .config import ConfigError, ExperimentConfig, build_theon
from .density import (DensityEstimate, DistributionTable, EquivalenceReport, distribution_on, equivalence_test,
                      exact_distribution, phi, t_ind, t_ind_exact, t_ind_mc)
from .peon import (GALLERY, ChamberGridPeon, EuclideanStructure, Peon, dependency_check, disjoint_union_theon,
                   gallery, independent_coupling, interpret_theon, kqrO_0theon, kqrO_1theon, reduct_theon)
from .quasitest import TestReport, counterexample_suite, disc_test, ucouple_test
from .realization import RealizationFamily, hat_f, hat_g, pull_theon, simulate_orders, strip_orders
from .sampler import PartialPoint, realize_structure, sample_conditional, sample_structure, sample_structures
from .space import Injection, LevelPoint, Mask, SpaceDescriptor, pullback_point, sample_point, sample_points
from .symbols import Interpretation, Language, Predicate, Structure, enumerate_structures

__version__ = "0.1.0"

__all__ = [
    "ChamberGridPeon", "ConfigError", "DensityEstimate", "DistributionTable", "EquivalenceReport",
    "EuclideanStructure", "ExperimentConfig", "GALLERY", "Injection", "Interpretation", "Language", "LevelPoint",
    "Mask", "PartialPoint", "Peon", "Predicate", "RealizationFamily", "SpaceDescriptor", "Structure",
    "TestReport", "build_theon", "counterexample_suite", "dependency_check", "disc_test", "disjoint_union_theon",
    "distribution_on", "enumerate_structures", "equivalence_test", "exact_distribution", "gallery", "hat_f",
    "hat_g", "independent_coupling", "interpret_theon", "kqrO_0theon", "kqrO_1theon", "phi", "pull_theon",
    "pullback_point", "realize_structure", "reduct_theon", "sample_conditional", "sample_point", "sample_points",
    "sample_structure", "sample_structures", "simulate_orders", "strip_orders", "t_ind", "t_ind_exact",
    "t_ind_mc", "ucouple_test",
]
