#include "checkpoint.hpp"

#include "container.hpp"

namespace dira {

void save_model(const Model& model, const std::string& path) {
    Container c;
    std::copy(kModelMagic, kModelMagic + 4, c.magic.begin());
    c.meta = model.spec().to_text();
    for (const auto& e : model.params())
        c.entries.push_back({e.name, e.tensor.shape(), e.tensor.data()});
    write_container(path, c);
}

Model load_model(const std::string& path) {
    const Container c = read_container(path, kModelMagic);
    Model model = Model::build(ModelSpec::from_text(c.meta));
    ParamSet loaded;
    for (const auto& e : c.entries) loaded.add(e.name, Tensor::from_data(e.shape, e.data));
    model.restore(loaded);
    return model;
}

}  // namespace dira
