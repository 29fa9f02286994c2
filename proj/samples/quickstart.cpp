// Simulates ten classifiers of unknown quality, then recovers the class
// imbalance and each classifier's sensitivity/specificity without labels.

#include <cstdio>

#include "isml/isml.hpp"

int main() {
  const auto spec = isml::uniform_accuracy_spec(/*m=*/10, /*n=*/20000, /*b=*/0.3, 0.5, 0.8, /*seed=*/7);
  const auto data = isml::generate(spec);

  for (auto method : {isml::ImbalanceMethod::tensor, isml::ImbalanceMethod::likelihood}) {
    const auto report = isml::estimate_accuracies(data.z, method);
    std::printf("%-10s b_hat = %+.4f (true %+.4f)\n", isml::to_string(method).data(), report.imbalance.b, spec.b);
  }

  const auto report = isml::estimate_accuracies(data.z, isml::ImbalanceMethod::likelihood);
  std::printf("\n  i   psi   psi_hat   eta   eta_hat\n");
  for (std::size_t i = 0; i < spec.m; ++i) {
    std::printf("%3zu  %.3f  %.3f    %.3f  %.3f\n", i + 1, spec.psi[i], report.acc.psi[i], spec.eta[i],
                report.acc.eta[i]);
  }

  const auto score = [&](const isml::EnsemblePrediction& p) { return isml::balanced_accuracy_score(p.labels, data.y); };
  std::printf("\nbalanced accuracy: majority %.4f  SML %.4f  i-SML %.4f\n", score(isml::majority_vote(data.z)),
              score(isml::sml_predict(data.z, report.imbalance.spectral.v)), score(isml::ml_predict(data.z, report.acc)));
}
