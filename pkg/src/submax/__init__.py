"""Sensitivity analysis for matched observational studies with effect modification.

The maximum-deviate ("submax") test combines the overall comparison with
comparisons inside each level of each binary modifier, and refers the largest
standardized deviate to their joint normal distribution under the worst-case
bias allowed by a sensitivity parameter Gamma.
"""

from .bounds import GammaBounds, group_bounds, pair_bounds, pvalue_upper_bound, set_bounds_separable
from .closed import ClosedTestResult, closed_test, closed_test_study, subset_critical_values
from .exceptions import NumericalError, SubmaxError, ValidationError
from .inference import (
    JointMoments,
    ScoredStudy,
    SubmaxResult,
    SweepResult,
    TwoSidedResult,
    critical_value,
    joint_moments,
    sensitivity_sweep,
    submax_test,
    two_sided_test,
)
from .mvn import bvn_cdf, equicoordinate_quantile, mvn_rectangle, mvn_upper_quadrant_below
from .power import (
    FavorableAlternative,
    amplify,
    amplify_check,
    design_sensitivity,
    power_oracle,
    power_row,
    power_single,
    power_submax,
)
from .scoring import kaplan_meier, prentice_wilcoxon_scores, score_study, wilcoxon_scores
from .simulation import SimConfig, SimReport, compare_to_theory, simulate
from .study import (
    ComparisonMatrix,
    CovariateSpec,
    MatchedSet,
    Survival,
    Unit,
    balanced_comparison_matrix,
    build_comparison_matrix,
    group_study,
)

__version__ = "0.1.0"
