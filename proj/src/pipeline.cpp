#include "wpsc/pipeline.hpp"

#include "wpsc/error.hpp"
#include "wpsc/graph.hpp"
#include "wpsc/wavelet.hpp"

namespace wpsc {

namespace {

Matrix graph_from(const SolverOutput& out, const std::optional<int>& ipd_dim) {
    if (out.representation) {
        const Matrix& z = *out.representation;
        return affinity_from_representation(ipd_dim ? ipd_threshold(z, std::min<int>(*ipd_dim, static_cast<int>(z.rows()))) : z);
    }
    if (ipd_dim) {
        const Matrix& w = *out.affinity;
        return affinity_from_representation(ipd_threshold(w, std::min<int>(*ipd_dim, static_cast<int>(w.rows()))));
    }
    return *out.affinity;
}

}  // namespace

PipelineResult run_single_view(const Matrix& x, const PipelineConfig& config) {
    const Matrix xn = column_normalize(x);
    SolverOutput out = run_solver(xn, config.solver);
    PipelineResult res;
    res.iterations = out.iterations;
    res.residual = out.residual;
    res.affinity = graph_from(out, config.ipd_dim);
    res.labels = spectral_clustering(res.affinity, config.clusters, config.seed);
    return res;
}

std::string view_name(const std::string& path) { return path.empty() ? "O" : path; }

std::vector<Matrix> five_views(const Dataset& ds) {
    const auto set = wp_decompose(ds, 1);
    std::vector<Matrix> views;
    for (const auto& path : five_view_paths()) views.push_back(column_normalize(set.node(path)));
    return views;
}

MeraPipelineResult run_mera_views(const std::vector<Matrix>& views, const MeraPipelineConfig& config) {
    MeraPipelineResult res;
    res.solver = mera_mvsc(views, config.mera);
    res.unified = unify_views(res.solver.z_hat);
    const Matrix w = affinity_from_representation(
        config.ipd_dim ? ipd_threshold(res.unified, std::min<int>(*config.ipd_dim, static_cast<int>(res.unified.rows())))
                       : res.unified);
    res.labels = spectral_clustering(w, config.clusters, config.seed);
    return res;
}

MeraPipelineResult run_wp_mera(const Dataset& ds, const MeraPipelineConfig& config) {
    return run_mera_views(five_views(ds), config);
}

}  // namespace wpsc
