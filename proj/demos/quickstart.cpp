// Minimal end-to-end run: generate a two-level junta hierarchy, train a small
// residual network layer by layer, and print the per-layer margin errors.

#include <iostream>

#include "hierlearn/hierlearn.hpp"

int main() {
  using namespace hierlearn;

  const std::uint64_t seed = 7;
  const ProximityMap prox = make_proximity("singleton", 1, 0);
  const Hierarchy h = gen_junta_hierarchy(/*d=*/8, /*n=*/6, /*r=*/2, /*K=*/2, prox, {}, seed);
  const Dataset ds = sample_dataset(h, /*m=*/400, seed);

  ActivationSpec act = make_activation("tanh", 2);
  ResNetParams params = init_network(h.d, h.n, /*q_width=*/256, /*D=*/5, prox, /*beta=*/0.5,
                                     "random", seed, std::move(act));

  LossParams lp;
  lp.B = 3.0;
  lp.xi = 1.0 / (2.0 * std::pow(2.0, 2.0));  // the junta certificate radius for K=2
  lp.m = ds.samples();
  lp.G_size = ds.locations;

  TrainConfig cfg;
  cfg.eps_opt = 1e-4;
  cfg.threads = 2;

  const TrainTrace trace = train_all(params, ds, lp, cfg);
  for (const LayerRecord& layer : trace.layers)
    std::cout << "layer " << layer.layer << ": Err_{S,0} = " << layer.err_zero
              << ", Err_{S,1/2} = " << layer.err_half << "\n";
  return 0;
}
