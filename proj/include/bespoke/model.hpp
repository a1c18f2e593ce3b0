#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace bespoke
{

/* Datasets */

struct dataset
{
  std::vector<std::vector<double>> features; // one row per sample
  std::vector<double> labels;
  std::vector<std::string> feature_names;

  std::size_t size() const { return features.size(); }
  std::size_t num_features() const { return feature_names.size(); }
};

/*! \brief How a delimiter-separated file maps onto a dataset.
 *
 * The label column is selected by name (requires a header) or by index
 * (negative counts from the end). `label_offset` is subtracted from every
 * label, e.g. to map wine quality 3..8 onto classes 0..5.
 */
struct dataset_schema
{
  std::string label_column;
  int label_index{ -1 };
  char delimiter{ ',' };
  std::optional<bool> header; // auto-detected when unset
  double label_offset{ 0.0 };
};

struct normalization
{
  std::vector<double> min;
  std::vector<double> max;
};

struct split_result
{
  dataset train;
  dataset test;
  normalization norm;
  std::vector<std::string> warnings;
};

dataset load_dataset( std::filesystem::path const& path, dataset_schema const& schema );

/*! \brief Seeded shuffle, split, and min/max normalization fitted on the train part.
 *
 * Test values are clipped into [0,1]. Constant train features normalize to 0
 * and produce a warning.
 */
split_result split_normalize( dataset const& d, double ratio, std::uint64_t seed );

using int_matrix = std::vector<std::vector<std::int64_t>>;

/*! \brief v -> round(v * (2^u - 1)); inputs must already lie in [0,1]. */
int_matrix quantize_inputs( dataset const& d, unsigned input_bits );

/* Models */

enum class model_kind
{
  mlp_c,
  mlp_r,
  svm_c,
  svm_r
};

bool is_classifier( model_kind k );
bool is_mlp( model_kind k );
std::string to_string( model_kind k );
model_kind model_kind_from_string( std::string const& s );

enum class activation
{
  none,
  relu
};

struct fixed_point_spec
{
  unsigned input_bits{ 4 };
  unsigned coeff_bits{ 8 };
  unsigned hidden_bits{ 8 };

  void validate() const;
  bool operator==( fixed_point_spec const& ) const = default;
};

struct real_layer
{
  std::vector<std::vector<double>> weights; // [neuron][input]
  std::vector<double> intercepts;
  activation act{ activation::none };
};

struct real_classifier
{
  std::vector<double> weights;
  double intercept{ 0.0 };
  std::optional<std::pair<int, int>> classes; // 1-vs-1 pair; empty for regression
};

struct real_model
{
  model_kind kind{ model_kind::svm_r };
  int n_features{ 0 };
  int n_classes{ 1 };
  std::vector<real_layer> layers;           // MLPs
  std::vector<real_classifier> classifiers; // SVMs

  void validate() const;
};

/*! \brief One hardwired weighted sum: sum_i x_i * w_i + intercept. */
struct quantized_sum
{
  std::vector<std::int64_t> weights;
  std::int64_t intercept{ 0 };
  double scale{ 1.0 }; // real-to-integer weight factor, informational
  std::optional<std::pair<int, int>> classes;

  bool operator==( quantized_sum const& ) const = default;
};

/*! \brief A layer of weighted sums sharing the same inputs.
 *
 * ReLU layers requantize with an arithmetic right shift by `shift` followed by
 * saturation into `hidden_bits` unsigned bits.
 */
struct quantized_layer
{
  std::vector<quantized_sum> sums;
  activation act{ activation::none };
  unsigned input_bits{ 4 };
  unsigned shift{ 0 };

  bool operator==( quantized_layer const& ) const = default;
};

struct approx_provenance
{
  int e{ 0 };
  std::vector<std::int64_t> error_sums;  // per weighted sum, sum_i (w_i - w~_i)
  std::vector<double> proxy_area_before; // per weighted sum, sum_i AREA(BM_w_i)
  std::vector<double> proxy_area_after;

  bool operator==( approx_provenance const& ) const = default;
};

/*! \brief Integer-coefficient model.
 *
 * SVMs are stored as a single layer of sums (classifiers carry their class
 * pair); MLPs as a ReLU hidden layer followed by a linear output layer.
 * `output_scale` converts regressor raw sums back to label units.
 */
struct quantized_model
{
  model_kind kind{ model_kind::svm_r };
  fixed_point_spec spec;
  int n_features{ 0 };
  int n_classes{ 1 };
  std::vector<quantized_layer> layers;
  double output_scale{ 1.0 };
  std::optional<approx_provenance> provenance;

  void validate() const;
  std::size_t num_sums() const;
  bool operator==( quantized_model const& ) const = default;
};

/*! \brief Symmetric scale (2^(c-1)-1)/max|w|, or 1 for an all-zero vector. */
double symmetric_scale( std::span<double const> weights, unsigned coeff_bits );

/*! \brief Round half away from zero. */
std::int64_t round_nearest( double v );

quantized_model quantize_model( real_model const& m, fixed_point_spec const& spec );

struct inference_result
{
  std::vector<std::int64_t> raw; // argmax inputs for classifiers, the final sum for regressors
  std::int64_t decision{ 0 };
};

/*! \brief Bit-exact integer evaluation of a quantized model. */
inference_result golden_infer( quantized_model const& q, std::span<std::int64_t const> x );

/*! \brief Lowest index among the maxima. */
std::size_t argmax_lowest( std::span<std::int64_t const> values );

/*! \brief Maps a decision to a label value; regressors dequantize and round. */
std::int64_t predicted_label( quantized_model const& q, std::int64_t decision );

double accuracy( quantized_model const& q, std::span<std::int64_t const> decisions, std::span<double const> labels );

/* Serialization */

nlohmann::json to_json( real_model const& m );
real_model real_model_from_json( nlohmann::json const& j );
real_model load_real_model( std::filesystem::path const& path );

nlohmann::json to_json( quantized_model const& q );
quantized_model quantized_model_from_json( nlohmann::json const& j );
quantized_model load_quantized_model( std::filesystem::path const& path );

/*! \brief Canonical text form; identical models give identical bytes. */
std::string serialize( quantized_model const& q );

} // namespace bespoke
