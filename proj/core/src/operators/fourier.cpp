#include <map>
#include <memory>
#include <mutex>

#include <fftw3.h>

#include "nestanet/operators.hpp"

namespace nestanet {
namespace {

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const noexcept { fftw_destroy_plan(p); }
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct PlanPair {
  PlanHandle forward;
  PlanHandle backward;
};

// The FFTW planner is not thread-safe; execution of an existing plan on new
// arrays is. Plans are unaligned out-of-place so any Vec buffers qualify and
// the arithmetic does not depend on buffer alignment.
class PlanCache {
 public:
  const PlanPair& get(int side) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(side);
    if (it != plans_.end()) return it->second;

    const auto count = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
    auto* in = fftw_alloc_complex(count);
    auto* out = fftw_alloc_complex(count);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair pair{PlanHandle(fftw_plan_dft_2d(side, side, in, out, FFTW_FORWARD, flags)),
                  PlanHandle(fftw_plan_dft_2d(side, side, in, out, FFTW_BACKWARD, flags))};
    fftw_free(in);
    fftw_free(out);
    if (!pair.forward || !pair.backward) throw Error("FFTW failed to create a plan");
    return plans_.emplace(side, std::move(pair)).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<int, PlanPair> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

void execute(fftw_plan plan, const Vec& in, Vec& out) {
  // fftw_execute_dft takes a non-const input pointer but does not modify the
  // input for out-of-place complex transforms.
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

void transform(int side, const Vec& in, Vec& out, bool forward) {
  const auto n = checked_pixel_count(side);
  expect_size(in, n, "dft2");
  out.resize(n);
  const auto& plans = plan_cache().get(side);
  if (in.data() == out.data()) {
    Vec tmp = in;
    execute(forward ? plans.forward.get() : plans.backward.get(), tmp, out);
  } else {
    execute(forward ? plans.forward.get() : plans.backward.get(), in, out);
  }
}

}  // namespace

void dft2_forward(int side, const Vec& in, Vec& out) { transform(side, in, out, true); }
void dft2_adjoint(int side, const Vec& in, Vec& out) { transform(side, in, out, false); }

Vec dft2_forward(const ImageGrid& x) {
  Vec out;
  dft2_forward(x.side(), x.data(), out);
  return out;
}

ImageGrid dft2_adjoint(int side, const Vec& spectrum) {
  Vec out;
  dft2_adjoint(side, spectrum, out);
  return ImageGrid(side, std::move(out));
}

}  // namespace nestanet
