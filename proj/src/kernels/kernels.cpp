#include "sgc/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace sgc::kernels {
namespace {

struct Selection {
  const Ops* ops;
  const char* name;
};

Selection select() {
  const char* forced = std::getenv("SGC_KERNELS");
#if defined(__x86_64__) || defined(_M_X64)
  if (forced != nullptr) {
    if (std::strcmp(forced, "avx2") == 0 && avx2::supported())
      return {&avx2::ops, "avx2"};
    return {&scalar::ops, "scalar"};
  }
  if (avx2::supported()) return {&avx2::ops, "avx2"};
#else
  (void)forced;
#endif
  return {&scalar::ops, "scalar"};
}

const Selection& selection() {
  static const Selection s = select();
  return s;
}

}  // namespace

const Ops& active() { return *selection().ops; }

std::string_view active_isa() { return selection().name; }

}  // namespace sgc::kernels
