"""Limit shapes of permutation classes described by tree-specifications."""

from .perms import Permutation, contains, is_simple, pattern_of, substitute
from .trees import (
    LEAF,
    Caterpillar,
    Leaf,
    Node,
    binary_perm_distribution,
    caterpillar_perm_distribution,
    decompose,
    induced_tree,
    parse_tree,
    perm_of,
    reduce_caterpillar,
    serialize_tree,
)
from .specs import TreeSpecification, dependency_graph, load_spec, parse_spec, restrict, serialize_spec
from .series import aperiodicity, evaluate, expand, find_radius
from .analysis import (
    analyze,
    asymptotic_check,
    build_D_matrices,
    build_E_tensors,
    build_M_star,
    classify,
    linear_parameters,
    perron,
    resolve_limit,
)
from .descriptors import Brownian, Mixture, Split, Unsupported, XPermuton
from .samplers import (
    BoltzmannConfig,
    BoltzmannSampler,
    boltzmann_sample,
    sample_brownian_marginal,
    sample_x_permuton,
    tune_control,
)
from .verify import (
    PatternHistogram,
    descriptor_pattern_distribution,
    empirical_pattern_histogram,
    run_verification,
    total_variation,
)

__version__ = "0.1.0"
