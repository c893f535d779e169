"""Privacy-preserving association rule mining over horizontal partitions."""

from .errors import (
    ContractError,
    DimensionError,
    ImprobableFailure,
    ParseError,
    ProtocolIntegrityError,
    RoutingError,
    UnsupportedConfiguration,
)
from .itemsets import (
    Itemset,
    PartitionedDb,
    TransactionDb,
    apriori_gen,
    is_frequent,
    local_support,
    parse_threshold,
    parse_transactions,
    partition_db,
    plaintext_apriori,
    singletons,
)
from .mining import IterationRecord, MiningResult, local_prune, mine
from .primitives import (
    SAFE_PRIMES,
    CipherParams,
    HashLookupTable,
    ShareVector,
    SignatureParams,
    bits_for_range,
    build_lookup_table,
    cipher_params,
    comm_decrypt,
    comm_encrypt,
    derive_rng,
    draw_cipher_key,
    draw_signature_params,
    encode_index,
    encode_residue,
    gen_fake_items,
    keyed_signature,
    reconstruct,
    share_vector,
)
from .protocols import (
    SetIncInstance,
    below_threshold_sets,
    masked_sum_phase,
    run_threshold,
    run_unifi,
    run_unifi_kc,
    set_inclusion,
    threshold_share_phase,
)
from .simnet import (
    CostLedger,
    SimNet,
    cost_report,
    improvement_factor,
    predicted_threshold_rand_bits,
    predicted_unifi_bits,
    predicted_unifi_kc_costs,
    predicted_unifi_rounds,
    write_cost_csv,
)
from .verification import (
    CandidateRule,
    RuleRecord,
    candidate_rules,
    frequency_modulus,
    ideal_compare,
    secure_confidence_check,
    secure_frequency_check,
    secure_sum_withheld,
)

__version__ = "0.1.0"
