from .config import load_generator_spec, load_link_budget
from .coverage import CoveragePlan, LinkBudget, coverage, edge_loss_db, place_repeaters, verify_plan
from .generate import MV_DEGREE_MIX, GeneratorSpec, InfeasibleSpec, generate_topology
