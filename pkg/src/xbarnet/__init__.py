"""Crossbar compiler and analog simulator for small CNNs.

Lowers convolutional networks onto memristor crossbar programs, runs
behavioral analog inference through them, verifies results against a
floating-point reference, and accounts for the hardware cost.
"""

from .analysis import (CostReport, Histogram, LatencyModel, PowerEstimate,
                       StageResources, analog_depth, build_cost_report,
                       count_resources, estimate_latency, estimate_power,
                       histogram_csv, render_report, report_to_dict,
                       stage_resources, weight_histogram)
from .bnmap import (BNCircuit, BNParams, compile_bn, evaluate_bn_circuit,
                    evaluate_bn_circuit_array, stage_programs)
from .convmap import (ConvGeometry, PlacementPlan, compile_conv,
                      compile_depthwise, compile_multichannel_conv,
                      decode_output, encode_input, output_dims,
                      placement_start)
from .crossbar import (CrossbarProgram, DeviceParams, evaluate_crossbar,
                       resistance_to_weight, validate_program,
                       weight_to_resistance)
from .errors import (ConfigError, GeometryError, ManifestError,
                     MissingWeightError, NetlistError, ProgramError,
                     XbarError)
from .formats import (WeightStore, export_netlist, import_weights,
                      load_network_spec, parse_netlist, spec_from_config,
                      write_weights)
from .functional import (HARD_SIGMOID_LIMITER, LimiterSpec,
                         activation_circuit, analog_add, analog_mul,
                         hard_sigmoid_circuit, hard_swish_circuit, limit,
                         relu_circuit)
from .pipeline import (CompiledNetwork, compile_network, forward_analog,
                       predict)
from .poolfc import (FcProgram, GapProgram, compile_fc, compile_gap,
                     decode_column_voltages, fc_input_voltages,
                     gap_input_voltages)
from .reference import (LayerSpec, NetworkSpec, activation_ref,
                        batchnorm_ref, conv2d_ref, depthwise_conv_ref,
                        fc_ref, forward_ref, gap_ref, se_block_ref)

__version__ = "0.1.0"

__all__ = [
    "BNCircuit", "BNParams", "CompiledNetwork", "ConfigError", "ConvGeometry",
    "CostReport", "CrossbarProgram", "DeviceParams", "FcProgram", "GapProgram",
    "GeometryError", "HARD_SIGMOID_LIMITER", "Histogram", "LatencyModel",
    "LayerSpec", "LimiterSpec", "ManifestError", "MissingWeightError",
    "NetlistError", "NetworkSpec", "PlacementPlan", "PowerEstimate",
    "ProgramError", "StageResources", "WeightStore", "XbarError",
    "activation_circuit", "activation_ref", "analog_add", "analog_depth",
    "analog_mul", "batchnorm_ref", "build_cost_report", "compile_bn",
    "compile_conv", "compile_depthwise", "compile_fc", "compile_gap",
    "compile_multichannel_conv", "compile_network", "conv2d_ref",
    "count_resources", "decode_column_voltages", "decode_output",
    "depthwise_conv_ref", "encode_input", "estimate_latency",
    "estimate_power", "evaluate_bn_circuit", "evaluate_bn_circuit_array",
    "evaluate_crossbar", "export_netlist", "fc_input_voltages", "fc_ref",
    "forward_analog", "forward_ref", "gap_input_voltages", "gap_ref",
    "hard_sigmoid_circuit", "hard_swish_circuit", "histogram_csv",
    "import_weights", "limit", "load_network_spec", "output_dims",
    "parse_netlist", "placement_start", "predict", "relu_circuit",
    "render_report", "report_to_dict", "resistance_to_weight",
    "se_block_ref", "spec_from_config", "stage_programs",
    "stage_resources", "validate_program", "weight_histogram",
    "weight_to_resistance",
    "write_weights",
]
