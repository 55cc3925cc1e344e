#pragma once
// Plain configuration and trace records shared across the encoder, cost
// model and benchmarking harness.

#include <cstdint>
#include <utility>
#include <vector>

namespace eat {

struct ModelConfig {
  int L = 6;
  int d = 64;
  int d_ff = 128;
  int heads = 4;
  int k = 8;  // attention window (total neighbors, split left/right)
  int vocab_size = 1000;
  int num_classes = 2;
  int max_seq_len = 128;

  int exit_layer = 4;        // confidence-gated exit; the final head sits at L
  bool patience_aux = false; // adds a lightweight head at exit_layer - 1
  double lambda_3 = 0.1;
  double lambda_4 = 0.3;
  double lambda_L = 1.0;
  double mu = 0.0;  // distillation weight; 0 disables the KL term
  double distill_temperature = 2.0;

  std::vector<int> prune_layers{2, 4};
  double prune_ratio = 0.3;

  int aux_layer() const { return exit_layer - 1; }
  // A window this wide makes the mask all-true for any t <= max_seq_len.
  int dense_window() const { return 2 * max_seq_len; }

  void validate() const;
  static ModelConfig toy();
  static ModelConfig full_scale();
};

struct TrainConfig {
  int epochs = 3;
  int batch_size = 32;
  double learning_rate = 3e-3;
  double weight_decay = 0.01;
  int warmup_steps = 50;
  uint64_t seed = 42;

  void validate() const;
};

// Per-example record of what one forward pass actually executed.
struct ForwardTrace {
  int exit_layer = 0;
  std::vector<int> tokens_entering;      // one entry per executed layer
  std::vector<long long> allowed_pairs;  // attention pairs per executed layer
  double final_retention = 1.0;          // tokens entering the exit layer / t_1
  // (layer, probability vector) for every head evaluated, in layer order.
  std::vector<std::pair<int, std::vector<double>>> exit_probs;
};

struct ComponentTimes {
  double embedding_ms = 0;
  double attention_ms = 0;
  double ffn_ms = 0;
  double pruning_ms = 0;
  double exit_heads_ms = 0;
};

}  // namespace eat
