"""Compile trained GBDT classifiers into quantized, pipelined Verilog.

The flow: load a model, integerize its split thresholds, quantize its leaf
scores, build the hardware IR, and either execute it in software (bit-exact
interpreter and cycle-accurate simulator) or emit Verilog-2001.
"""
from .errors import (
    ConfigError,
    ContractViolation,
    DataError,
    Gbdt2RtlError,
    ModelParseError,
    ValidationError,
)
from .evaluator import PredictionReport, evaluate_dataset, predict_quantized
from .features import FeatureQuantizer, integerize_thresholds
from .leaves import (
    QuantizedEnsemble,
    QuantNode,
    QuantTree,
    dump_quantized_json,
    evaluate_quant_tree,
    load_quantized_json,
    quantize_binary,
    quantize_leaves,
    quantize_multiclass,
    round_half_away,
)
from .model import (
    TASK_BINARY,
    TASK_MULTICLASS,
    DecisionTree,
    GbdtEnsemble,
    TreeNode,
    dump_ensemble_json,
    evaluate_tree,
    load_ensemble_json,
    load_xgboost_model,
    predict_class_float,
    predict_margin,
    validate_ensemble,
)
from .netlist import (
    AdderTree,
    Key,
    Netlist,
    PipelineConfig,
    PipelineSimulator,
    Selector,
    TreeLogic,
    build_adder_tree,
    build_keys,
    build_netlist,
    dump_netlist_json,
    interpret_netlist,
    netlist_stats,
    simulate_pipelined,
    tree_to_logic,
)
from .verilog import (
    EmitOptions,
    emit,
    emit_files,
    emit_testbench,
    read_vector_file,
    write_vector_file,
)

__version__ = "0.1.0"
