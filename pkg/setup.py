from setuptools import setup,find_packages 

setup(
    name='voltfield',
    version='0.1.0',
    description='A package to simulate model-less robust voltage control of PV plants in distribution grids',
    author='voltfield developers',
    license='MIT',
    long_description_content_type='text/markdown',
    long_description=open('README.md', 'rb').read().decode('utf-8'),
    keywords=['voltage control','sensitivity coefficients','recursive least squares','robust optimization','PV'],
    python_requires='>=3.8',
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Education',
        'Intended Audience :: Science/Research',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'License :: OSI Approved :: MIT License',
        ],
    packages=find_packages(exclude=['tests']),
    include_package_data=True,
    package_data={'voltfield':['data/cigre_lv/*.json','data/cigre_lv/profiles/*.csv','data/cigre_lv/previous_day/*.csv']},
    install_requires=[
        'scipy>=1.7',
        'numpy>=1.21.2',
        'astropy>=4.3.1',
        'pandas>=1.3',
        'networkx>=2.6',
        'numba>=0.54',
        'tabulate>=0.8.9'
        ],
    extras_require={'test':['pytest>=6.2']},
    entry_points={'console_scripts':['voltfield=voltfield.cli:main']},
)
