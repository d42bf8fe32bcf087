#include "dspnet/kernels.hpp"

namespace dspnet::kernels {
namespace {

struct Dispatch {
    const Ops* ops;
    std::string name;
    Dispatch() {
        if (const Ops* v = avx2()) {
            ops = v;
            name = "avx2";
        } else {
            ops = &scalar();
            name = "scalar";
        }
    }
};

Dispatch& dispatch() {
    static Dispatch d;
    return d;
}

}  // namespace

const Ops& active() { return *dispatch().ops; }
const std::string& active_name() { return dispatch().name; }

void force_scalar() {
    dispatch().ops = &scalar();
    dispatch().name = "scalar";
}

}  // namespace dspnet::kernels
