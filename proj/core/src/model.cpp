#include "esma/model.hpp"

#include "esma/parallel.hpp"

namespace esma {

std::vector<EvalRecord> evaluate_model(const ParametricModel& model, std::span<const double> theta,
                                       const Dataset& data, bool with_idk, std::size_t threads) {
  std::vector<EvalRecord> records(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) {
    const QaItem& item = data.items[i];
    const DualResponse r = model.respond(theta, item);
    EvalRecord& rec = records[i];
    rec.item_id = item.id;
    rec.correct = r.correct;
    rec.meta = r.meta;
    rec.confidence = r.confidence;
    if (with_idk) rec.idk = model.respond_idk(theta, item);
  });
  return records;
}

}  // namespace esma
