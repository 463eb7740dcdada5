"""Weighted first-order logic reasoning over social-network predicates.

Grounds weighted rules into a propositional program and runs boolean (MLN)
inference and learning or soft-logic (PSL) MPE inference over it, with
evaluation protocols and baselines for preference-prediction experiments.
"""

from .logic import (HARD, Constant, GroundAtom, GroundedProgram, GroundRule,
                    InfeasibleError, KnowledgeBase, Literal, LogicError,
                    ParseError, GroundingError, PredicateSchema, Rule,
                    Variable, format_rule, ground, parse_rule)
from .semantics import (Interpretation, World, count_true_groundings,
                        eval_ground_rule, rule_distance, soft_and, soft_neg,
                        soft_or, world_log_weight)
from .mln import (MentionModel, MlnConfig, TooManyFreeAtoms, apply_weights,
                  conditional_query, em_learn_latent, exact_joint,
                  exact_query, gibbs_joint, gibbs_query, learn_discriminative,
                  onehot_query)
from .psl import (PslConfig, SoftProgram, compile_soft, hard_violations,
                  mpe_infer, soft_marginal_report, total_distance,
                  transfer_rules)
from .schema import (CATEGORY_LABELS, CategorySet, SocialGraph,
                     default_schema, instantiate_templates, likecat_predicate)
from .extract import (GeoEvent, NameGenderTable, derive_network_atoms,
                      infer_gender, infer_location, spouse_confidence)
from .baselines import (FeatureVector, cf_predict, featurize, nb_predict,
                        nb_train, prior_baselines)
from .harness import (EvalReport, Metrics, MlnEngine, PslEngine, SynthParams,
                      build_program, friend_latent_eval, friend_observed_eval,
                      rule_probability_report, synth_generate)

__version__ = "0.1.0"
