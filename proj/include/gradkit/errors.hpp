#pragma once

#include <stdexcept>
#include <string>

namespace gradkit {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// gradation rules
struct ambiguous_alignment : error { using error::error; };
struct not_a_pair : error { using error::error; };
struct site_mismatch : error { using error::error; };
struct not_gradating : error { using error::error; };

// dataset
struct malformed_row : error {
  malformed_row(const std::string& what, long line) : error(what), line(line) {}
  long line;
};
struct empty_file : error { using error::error; };
struct quota_infeasible : error { using error::error; };
struct insufficient_pool : error { using error::error; };

// training and evaluation
struct empty_input : error { using error::error; };
struct non_finite_loss : error {
  non_finite_loss(const std::string& what, long step) : error(what), step(step) {}
  long step;
};
struct empty_eval_set : error { using error::error; };

// checkpoints
struct version_mismatch : error { using error::error; };
struct corrupt_file : error { using error::error; };

// probing
struct excluded_site : error { using error::error; };
struct empty_group : error { using error::error; };
struct degenerate_variance : error { using error::error; };

}  // namespace gradkit
