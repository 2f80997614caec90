import os
import glob
import re
import yaml
from jinja2 import Environment
TEMPLATE = """# {{ name }}

{{ doc.short_description | default('No description') }}

{{ description }}

{% if doc.requirements %}## Requirements

{% for req in doc.requirements %}- {{ req }}
{% endfor %}
{% endif %}## Parameters

{% if doc.options %}| Parameter | Required | Default | Choices | Description |
|---|---|---|---|---|
{% for opt_name, opt in doc.options.items() %}| `{{ opt_name }}` | {{ opt.required | default(False) }} | {{ opt.default | default('') }} | {{ opt.choices | default('') }} | {{ opt.description | flatten }} |
{% endfor %}{% else %}No parameters.
{% endif %}
## Examples

{% if examples %}```yaml
{{ examples }}
```
{% else %}No examples found.
{% endif %}
## Return Values

{% if returns %}```yaml
{{ returns }}
```
{% endif %}"""
def extract_block(content, block_name):
    pattern = r"{}\s*=\s*r?'''(.*?)'''".format(block_name)
    match = re.search(pattern, content, re.DOTALL)
    if match:
        return match.group(1)
    return None
def flatten(value):
    if isinstance(value, list):
        value = " ".join([str(x) for x in value])
    return str(value).replace("\n", " ")
def render(env, module_name, doc, examples_str, return_str):
    description = doc.get('description', [])
    if isinstance(description, list):
        description = "\n".join([str(x) for x in description])
    return env.from_string(TEMPLATE).render(
        name=module_name,
        doc=doc,
        description=description,
        examples=examples_str.strip() if examples_str else None,
        returns=return_str.strip() if return_str else None,
    )
def main():
    modules_dir = 'plugins/modules'
    docs_dir = 'docs'
    if not os.path.exists(docs_dir):
        os.makedirs(docs_dir)
    env = Environment(keep_trailing_newline=True, trim_blocks=False)
    env.filters['flatten'] = flatten
    for filepath in sorted(glob.glob(os.path.join(modules_dir, '*.py'))):
        filename = os.path.basename(filepath)
        module_name = os.path.splitext(filename)[0]
        if module_name == '__init__':
            continue
        with open(filepath, 'r') as f:
            content = f.read()
        doc_yaml_str = extract_block(content, 'DOCUMENTATION')
        if not doc_yaml_str:
            print(f"Skipping {module_name}: No DOCUMENTATION found.")
            continue
        try:
            doc = yaml.safe_load(doc_yaml_str)
        except yaml.YAMLError as e:
            print(f"Error parsing YAML for {module_name}: {e}")
            continue
        md_content = render(env, module_name, doc, extract_block(content, 'EXAMPLES'), extract_block(content, 'RETURN'))
        output_path = os.path.join(docs_dir, f"{module_name}.md")
        with open(output_path, 'w') as f:
            f.write(md_content)
        print(f"Generated {output_path}")
if __name__ == "__main__":
    main()
