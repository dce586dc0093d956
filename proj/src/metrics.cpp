#include "dnt/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace dnt {

QualityReport quality_report(std::span<const double> predictions, std::span<const double> truth) {
    if (predictions.size() != truth.size())
        throw DimensionError("quality_report: predictions and truth differ in length");
    if (predictions.empty()) throw DimensionError("quality_report: empty inputs");

    double abs_sum = 0.0, sq_sum = 0.0;
    double t_min = truth[0], t_max = truth[0];
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        double r = predictions[i] - truth[i];
        abs_sum += std::fabs(r);
        sq_sum += r * r;
        t_min = std::min(t_min, truth[i]);
        t_max = std::max(t_max, truth[i]);
    }
    double n = static_cast<double>(predictions.size());

    QualityReport rep;
    rep.raw_mae = abs_sum / n;
    rep.raw_mse = sq_sum / n;
    rep.mae = std::min(rep.raw_mae, kErrorCap);
    rep.mse = std::min(rep.raw_mse, kErrorCap);
    rep.mae_capped = rep.raw_mae > kErrorCap;
    rep.mse_capped = rep.raw_mse > kErrorCap;

    double range = t_max - t_min;
    if (range > 0.0) {
        rep.raw_nrmse = std::sqrt(rep.raw_mse) / range;
        rep.nrmse = std::min(*rep.raw_nrmse, kErrorCap);
        rep.nrmse_capped = *rep.raw_nrmse > kErrorCap;
    }
    return rep;
}

CostReport cost_accounting(std::span<const CostEvent> event_log) {
    CostReport rep;
    for (const CostEvent& e : event_log) {
        switch (e.kind) {
            case CostEvent::Kind::model_transfer:
                rep.comm_units += static_cast<double>(e.a) * static_cast<double>(e.b);
                break;
            case CostEvent::Kind::raw_upload:
                rep.raw_data_units += static_cast<double>(e.a) * kRawRecordUnits;
                break;
            case CostEvent::Kind::compute:
                rep.compute_units += static_cast<double>(e.a) * static_cast<double>(e.b);
                break;
        }
    }
    return rep;
}

double cost_reduction(const CostReport& candidate, const CostReport& baseline) {
    double base_total = baseline.total();
    if (base_total <= 0.0) throw DomainError("cost_reduction: baseline total must be positive");
    return 100.0 * (1.0 - candidate.total() / base_total);
}

}  // namespace dnt
