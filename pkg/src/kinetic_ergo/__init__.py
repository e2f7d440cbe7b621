"""kinetic-ergo: simulation and verification for non-equilibrium kinetic
SDEs, McKean-Vlasov equations, and mean-field particle systems.

The package validates dissipativity certificates, hypocoercivity
constructions, and exponential-ergodicity / propagation-of-chaos rates
against exact Gaussian and optimal-transport oracles.
"""
from .backend import backend_name
from .dissipativity import (CheckReport, DissipativityCert, Eta1Threshold,
                            check_patdi, check_patdi_system, compute_eta1,
                            search_cert)
from .entropy import KlEstimate, kl_decay_curve, kl_knn
from .errors import (CertificateError, ConfigError, DimensionMismatchError,
                     DivergenceError, EstimatorInputError,
                     InteractionBudgetError, KineticErgoError,
                     MeasureArgumentError, NonContractionError, SizeCapError,
                     SolverInputError, UnderdeclaredBoundError)
from .gaussian import (GaussianLaw, LinearModel, fit_gaussian, invariant_law,
                       kl_gaussian, poincare_constant, transition_law,
                       w2_gaussian)
from .harness import (ExperimentConfig, RateFit, fit_rate, run_experiment,
                      talagrand_harnack_audit)
from .hypo import (HypoConstants, HypoFunctional, HypoWeight, build_constants,
                   build_weight, check_rt_negativity, decay_factor,
                   eval_functional)
from .meanfield import (ChaosScanResult, FixedPointState, chaos_scan,
                        frozen_stationary, picard_fixed_point, rd,
                        simulate_particles)
from .model import (DiffusionSpec, DriftSpec, Ensemble, InteractionKernel,
                    LinearAttraction, Perturbation, PhasePoint,
                    SystemDriftSpec, eval_drift, eval_jacobian,
                    lift_to_system, make_interaction, make_perturbation)
from .sde import (CoupledPath, EnsemblePath, IntegratorConfig, TangentFlow,
                  simulate, simulate_coupled, tangent_flow)
from .transport import (W2Estimate, cost_matrix, w2_empirical,
                        w2_empirical_general, w2_to_reference)

__version__ = "0.1.0"
