// Train a small SPL network on a synthetic route, then localise a noisy
// replay of it and compare against SeqSLAM.

#include "seqplace/seqplace.hpp"

#include <iostream>

using namespace seqplace;

int main() {
  ingest::SynthOptions so;
  so.frames = 120;
  so.dim = 32;
  so.seed = 7;
  const auto env = ingest::synth_traverse(so);

  ingest::QueryOptions qo;
  qo.noise_sigma = 0.1;
  qo.seed = 11;
  const auto query = ingest::perturb_query(env, qo);

  const int tw = 5;
  auto cfg = ModelConfig::make(Variant::kSpl, so.dim, 64, so.frames, tw);
  TrainConfig tc;
  tc.epochs = 300;
  tc.shuffle = true;
  tc.seed = 3;
  const auto trained = spl::train(spl::build_model(cfg, 1), env.descriptors, env.poses, tc);
  std::cout << "train accuracy " << trained.history.back().accuracy << "\n";

  eval::GroundTruth gt;
  gt.radius = 2;
  const auto spl_scores = spl::infer(trained.model, query.descriptors, query.poses);
  for (const auto f : spl_scores.query_frames) gt.map.push_back(query.ground_truth[static_cast<std::size_t>(f)]);
  std::cout << "SPL     AUC " << eval::pr_curve(spl_scores, gt).auc << "\n";

  classic::SeqSlamConfig sc;
  const auto sim = classic::similarity_matrix(env.descriptors, query.descriptors, classic::Metric::kCosine);
  const auto seq = classic::seqslam_match(classic::contrast_enhance(sim.distances, sc.r_window), sc);
  gt.map = query.ground_truth;
  std::cout << "SeqSLAM AUC " << eval::pr_curve(seq, gt).auc << "\n";
}
