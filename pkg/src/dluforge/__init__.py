"""dluforge: constructive compiler and verification harness for DLU networks."""

from .network import (ActivationKind, DLU, IDENTITY, Layer, Network, RELU,
                      StructuralAudit, activate, audit, deserialize, elu,
                      evaluate, forward, leaky_relu, load, save, serialize)
from .gates import (division_gate, identity_gadget, indicator_gadget,
                    product_gate, reciprocal_gate, relu_surrogate, square_gate)
from .polynomials import (BasisPolynomial, CHEBYSHEV, LEGENDRE, MONOMIAL,
                          RecurrenceBasis, compile_monomial,
                          compile_monomial_product, compile_polynomial,
                          compile_rational)
from .constructions import (ExpansionSpec, TargetFunction, build_bernstein,
                            build_exp_abs, build_piecewise,
                            build_rank_one_tensor, compile_expansion, expand,
                            fit_rational, hyperbolic_indices)
from .relu_baseline import (PiecewiseLinear1D, breakpoint_budget,
                            extract_breakpoints, lower_bound_certificate,
                            relu_poly_approx, yarotsky_product, yarotsky_square)
from .verify import (ErrorReport, GridSpec, SweepResult, measure_error, sweep,
                     write_report)
from .targets import get_target, target_names

__version__ = "0.1.0"
