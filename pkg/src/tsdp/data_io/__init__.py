"""Instance generators, file formats and quality reports."""
from .files import (read_edge_list, read_matrix_market, read_support, read_vector,
                    write_edge_list, write_matrix_market, write_support, write_vector)
from .generators import (gen_queue_matrix, splitmix64, target_mix, target_power_step,
                         uniform_open)
from .report import quality_report, to_json

__all__ = [
    "gen_queue_matrix", "splitmix64", "uniform_open", "target_mix", "target_power_step",
    "read_matrix_market", "write_matrix_market", "read_support", "write_support",
    "read_edge_list", "write_edge_list", "read_vector", "write_vector",
    "quality_report", "to_json",
]
